use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::matcher::GroupLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: GroupLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True rows of this class.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: u64,
    pub accuracy: f64,
    /// Sorted union of true and predicted labels; indexes `classes` and
    /// both axes of `confusion`.
    pub labels: Vec<GroupLabel>,
    pub classes: Vec<ClassMetrics>,
    /// `confusion[t][p]` counts rows of true label `t` predicted as `p`.
    pub confusion: Vec<Vec<u64>>,
    /// Fraction of true-A rows predicted Z; `None` without true-A rows.
    pub a_to_z_rate: Option<f64>,
    /// Fraction of true-A rows predicted anything but A.
    pub a_misrouted_rate: Option<f64>,
}

impl EvaluationReport {
    pub fn class(&self, label: GroupLabel) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.label == label)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(y_true: &[GroupLabel], y_pred: &[GroupLabel]) -> Result<EvaluationReport, EvalError> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    let labels: Vec<GroupLabel> = y_true
        .iter()
        .chain(y_pred)
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |l: &GroupLabel| labels.binary_search(l).expect("label in union");
    let k = labels.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for (t, p) in y_true.iter().zip(y_pred) {
        confusion[pos(t)][pos(p)] += 1;
    }
    let classes = (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label: labels[c],
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let total = y_true.len() as u64;
    let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
    let a = GroupLabel::from_letter('A').expect("A is a group");
    let z = GroupLabel::from_letter('Z').expect("Z is a group");
    let (mut a_rows, mut a_to_z, mut a_wrong) = (0u64, 0u64, 0u64);
    for (t, p) in y_true.iter().zip(y_pred) {
        if *t == a {
            a_rows += 1;
            a_to_z += u64::from(*p == z);
            a_wrong += u64::from(*p != a);
        }
    }
    let a_rate = |n| (a_rows > 0).then(|| ratio(n, a_rows));
    Ok(EvaluationReport {
        rows: total,
        accuracy: ratio(correct, total),
        labels,
        classes,
        confusion,
        a_to_z_rate: a_rate(a_to_z),
        a_misrouted_rate: a_rate(a_wrong),
    })
}

/// Rows are true labels, columns predictions, both over the report's label
/// union. Cells are right-aligned to a common width.
pub fn render_confusion_matrix(report: &EvaluationReport) -> String {
    let row_heads: Vec<String> = report.labels.iter().map(|l| format!("true:{l}")).collect();
    let col_heads: Vec<String> = report.labels.iter().map(|l| format!("pred:{l}")).collect();
    let head_w = row_heads.iter().map(String::len).max().unwrap_or(0);
    let cell_w = report
        .confusion
        .iter()
        .flatten()
        .map(|v| v.to_string().len())
        .chain(col_heads.iter().map(String::len))
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = write!(out, "{:head_w$}", "");
    for h in &col_heads {
        let _ = write!(out, " {h:>cell_w$}");
    }
    out.push('\n');
    for (head, row) in row_heads.iter().zip(&report.confusion) {
        let _ = write!(out, "{head:<head_w$}");
        for v in row {
            let _ = write!(out, " {v:>cell_w$}");
        }
        out.push('\n');
    }
    out
}
