use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::artifact::ModelArtifact;
use super::{evaluate, render_confusion_matrix, train_test_split, EvalError, EvaluationReport, SplitSpec};
use crate::features::Dataset;
use crate::matcher::GroupLabel;
use crate::process_cpu_time;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Seeds both the split and the models of this run.
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub report: EvaluationReport,
}

/// Elapsed and process CPU time of one run, in seconds. Kept apart from the
/// metrics so that reports stay byte-identical across invocations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub seed: u64,
    pub train_wall: f64,
    pub train_cpu: f64,
    pub predict_wall: f64,
    pub predict_cpu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAggregate {
    pub label: GroupLabel,
    /// Runs whose test labels or predictions contained the class.
    pub runs: usize,
    pub min_f1: f64,
    pub mean_f1: f64,
    pub max_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub learner: String,
    pub base_seed: u64,
    pub runs: Vec<RunRecord>,
    pub timings: Vec<RunTiming>,
    pub mean_accuracy: f64,
    pub classes: Vec<ClassAggregate>,
    /// Worst A-misrouted rate over the runs that held true-A rows.
    pub max_a_misrouted_rate: Option<f64>,
    pub max_a_to_z_rate: Option<f64>,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64, f64) {
    let (wall, cpu) = (Instant::now(), process_cpu_time());
    let out = f();
    let cpu_used = process_cpu_time().saturating_sub(cpu);
    (out, wall.elapsed().as_secs_f64(), cpu_used.as_secs_f64())
}

fn max_option(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

/// Splits, trains and evaluates `runs` times with seeds
/// `base_seed..base_seed + runs`; `learner` is `None` for the voting
/// ensemble or a single classifier kind.
pub fn run_protocol(
    ds: &Dataset,
    runs: usize,
    base_seed: u64,
    learner: Option<crate::classifiers::ClassifierKind>,
) -> Result<ProtocolReport, EvalError> {
    if runs == 0 {
        return Err(EvalError::InvalidSettings("runs must be at least 1".into()));
    }
    let mut records = Vec::with_capacity(runs);
    let mut timings = Vec::with_capacity(runs);
    for i in 0..runs as u64 {
        let seed = base_seed.wrapping_add(i);
        let (train, test) = train_test_split(ds, &SplitSpec::new(seed))?;
        let (model, train_wall, train_cpu) = timed(|| ModelArtifact::train(&train, seed, learner));
        let model = model?;
        let (pred, predict_wall, predict_cpu) = timed(|| model.predict(&test));
        let report = evaluate(&test.labels(), &pred?)?;
        records.push(RunRecord {
            seed,
            train_rows: train.rows.len(),
            test_rows: test.rows.len(),
            report,
        });
        timings.push(RunTiming {
            seed,
            train_wall,
            train_cpu,
            predict_wall,
            predict_cpu,
        });
    }
    let mean_accuracy = records.iter().map(|r| r.report.accuracy).sum::<f64>() / runs as f64;
    let mut labels: Vec<GroupLabel> = records.iter().flat_map(|r| r.report.labels.iter().copied()).collect();
    labels.sort_unstable();
    labels.dedup();
    let classes = labels
        .into_iter()
        .map(|label| {
            let f1: Vec<f64> = records
                .iter()
                .filter_map(|r| r.report.class(label).map(|c| c.f1))
                .collect();
            ClassAggregate {
                label,
                runs: f1.len(),
                min_f1: f1.iter().copied().fold(f64::INFINITY, f64::min),
                mean_f1: f1.iter().sum::<f64>() / f1.len() as f64,
                max_f1: f1.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(ProtocolReport {
        learner: learner.map_or_else(|| "ENSEMBLE".to_string(), |k| k.name().to_string()),
        base_seed,
        max_a_misrouted_rate: max_option(records.iter().map(|r| r.report.a_misrouted_rate)),
        max_a_to_z_rate: max_option(records.iter().map(|r| r.report.a_to_z_rate)),
        runs: records,
        timings,
        mean_accuracy,
        classes,
    })
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

impl ProtocolReport {
    pub fn class(&self, label: GroupLabel) -> Option<&ClassAggregate> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// Human-readable summary, per-class F1 ranges and every run's confusion
    /// matrix. Contains no timings.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "learner {}", self.learner);
        let _ = writeln!(out, "runs {} base_seed {}", self.runs.len(), self.base_seed);
        let _ = writeln!(out, "mean_accuracy {:.4}", self.mean_accuracy);
        let _ = writeln!(out, "max_a_misrouted_rate {}", fmt_rate(self.max_a_misrouted_rate));
        let _ = writeln!(out, "max_a_to_z_rate {}", fmt_rate(self.max_a_to_z_rate));
        let _ = writeln!(out, "\nclass  runs  f1_min  f1_mean  f1_max");
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<5}  {:>4}  {:.4}  {:.4}   {:.4}",
                c.label, c.runs, c.min_f1, c.mean_f1, c.max_f1
            );
        }
        for r in &self.runs {
            let _ = writeln!(
                out,
                "\nrun seed {} train {} test {} accuracy {:.4} a_misrouted {}",
                r.seed,
                r.train_rows,
                r.test_rows,
                r.report.accuracy,
                fmt_rate(r.report.a_misrouted_rate)
            );
            out.push_str(&render_confusion_matrix(&r.report));
        }
        out
    }

    /// `metric,class,value` lines; aggregate metrics leave `class` empty.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("metric,class,value\n");
        let _ = writeln!(out, "runs,,{}", self.runs.len());
        let _ = writeln!(out, "base_seed,,{}", self.base_seed);
        let _ = writeln!(out, "mean_accuracy,,{}", self.mean_accuracy);
        for (name, v) in [
            ("max_a_misrouted_rate", self.max_a_misrouted_rate),
            ("max_a_to_z_rate", self.max_a_to_z_rate),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "{name},A,{v}");
            }
        }
        for c in &self.classes {
            let _ = writeln!(out, "f1_min,{},{}", c.label, c.min_f1);
            let _ = writeln!(out, "f1_mean,{},{}", c.label, c.mean_f1);
            let _ = writeln!(out, "f1_max,{},{}", c.label, c.max_f1);
        }
        for (i, r) in self.runs.iter().enumerate() {
            let _ = writeln!(out, "run{i}_accuracy,,{}", r.report.accuracy);
            for c in &r.report.classes {
                let _ = writeln!(out, "run{i}_precision,{},{}", c.label, c.precision);
                let _ = writeln!(out, "run{i}_recall,{},{}", c.label, c.recall);
                let _ = writeln!(out, "run{i}_f1,{},{}", c.label, c.f1);
            }
        }
        out
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("seed,train_wall_s,train_cpu_s,predict_wall_s,predict_cpu_s\n");
        for t in &self.timings {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6}",
                t.seed, t.train_wall, t.train_cpu, t.predict_wall, t.predict_cpu
            );
        }
        out
    }

    /// Summed wall time over all runs.
    pub fn total_wall(&self) -> Duration {
        Duration::from_secs_f64(self.timings.iter().map(|t| t.train_wall + t.predict_wall).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testdata::label;
    use crate::classifiers::ClassifierKind;
    use crate::ensemble::testdata::separable_dataset;

    #[test]
    fn single_run_equals_its_report() {
        let ds = separable_dataset(20, 3);
        let p = run_protocol(&ds, 1, 11, None).unwrap();
        let r = &p.runs[0].report;
        assert_eq!(p.mean_accuracy, r.accuracy);
        for c in &p.classes {
            let f1 = r.class(c.label).unwrap().f1;
            assert_eq!((c.min_f1, c.mean_f1, c.max_f1), (f1, f1, f1));
        }
        assert_eq!(p.max_a_misrouted_rate, r.a_misrouted_rate);
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let ds = separable_dataset(15, 4);
        let a = run_protocol(&ds, 3, 100, None).unwrap();
        let b = run_protocol(&ds, 3, 100, None).unwrap();
        assert_eq!(a.render_text(), b.render_text());
        assert_eq!(a.metrics_csv(), b.metrics_csv());
        assert_eq!(a.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), [100, 101, 102]);
        for c in &a.classes {
            assert!(c.min_f1 <= c.mean_f1 && c.mean_f1 <= c.max_f1);
        }
        assert!(a.class(label('A')).is_some());
    }

    #[test]
    fn single_learner_and_zero_runs() {
        let ds = separable_dataset(15, 4);
        let p = run_protocol(&ds, 2, 0, Some(ClassifierKind::Tree)).unwrap();
        assert_eq!(p.learner, "TREE");
        assert_eq!(p.timings_csv().lines().count(), 3);
        assert!(matches!(run_protocol(&ds, 0, 0, None), Err(EvalError::InvalidSettings(_))));
    }
}
