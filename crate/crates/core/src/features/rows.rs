//! Rows file: the labelled snapshot `analyze` hands to `encode`.
//!
//! ```text
//! #affinity-rows v1 <sha256>
//! #meta {"seed":7,"nodes_checksum":"..","tasks_checksum":"..","clock_micros":..}
//! job_id,task_index,count,group,cpu,mem,labels
//! 1042,0,1,A,0.5,0.25,C|EQ|i:3;K|NEQ|s:v1,s:v4
//! ```
//!
//! Labels may contain commas, so they form the last column.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_group, label_attribute, DataRow, FeatureError};
use crate::container::{seal, unseal};

const MAGIC: &str = "affinity-rows";
const COLUMNS: &str = "job_id,task_index,count,group,cpu,mem,labels";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RowsMeta {
    pub seed: u64,
    pub nodes_checksum: String,
    pub tasks_checksum: String,
    pub clock_micros: u64,
}

pub fn rows_to_text(meta: &RowsMeta, rows: &[DataRow]) -> String {
    let mut body = format!(
        "#meta {}\n{COLUMNS}\n",
        serde_json::to_string(meta).expect("meta serializes")
    );
    for r in rows {
        let labels: Vec<&str> = r.labels.values().map(String::as_str).collect();
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{}",
            r.job_id,
            r.task_index,
            r.count,
            r.group,
            r.cpu,
            r.mem,
            labels.join(";")
        );
    }
    seal(MAGIC, &body)
}

pub fn rows_from_text(text: &str) -> Result<(RowsMeta, Vec<DataRow>), FeatureError> {
    let body = unseal(MAGIC, text)?;
    let mut lines = body.lines();
    let meta = lines
        .next()
        .and_then(|l| l.strip_prefix("#meta "))
        .ok_or_else(|| FeatureError::Malformed("missing #meta line".into()))?;
    let meta: RowsMeta =
        serde_json::from_str(meta).map_err(|e| FeatureError::Malformed(format!("meta: {e}")))?;
    if lines.next() != Some(COLUMNS) {
        return Err(FeatureError::Malformed("missing column header".into()));
    }
    let rows = lines
        .enumerate()
        .map(|(n, l)| {
            parse_row(l).map_err(|m| FeatureError::Malformed(format!("data row {}: {m}", n + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((meta, rows))
}

fn parse_row(line: &str) -> Result<DataRow, String> {
    let fields: Vec<&str> = line.splitn(7, ',').collect();
    let [job, index, count, group, cpu, mem, labels] = fields[..] else {
        return Err(format!("expected 7 fields, found {}", fields.len()));
    };
    let num = |s: &str| s.parse::<u64>().map_err(|_| format!("bad integer {s:?}"));
    let fraction = |s: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .ok()
            .filter(|x| (0.0..=1.0).contains(x))
            .ok_or_else(|| format!("bad fraction {s:?}"))
    };
    let count = num(count)?;
    let group = group.parse()?;
    check_group(count, group).map_err(|e| e.to_string())?;
    let mut map = BTreeMap::new();
    if !labels.is_empty() {
        for label in labels.split(';') {
            let attr = label_attribute(label).ok_or_else(|| format!("bad label {label:?}"))?;
            if map.insert(attr.to_string(), label.to_string()).is_some() {
                return Err(format!("two labels for attribute {attr}"));
            }
        }
    }
    Ok(DataRow {
        job_id: num(job)?,
        task_index: index.parse().map_err(|_| format!("bad task index {index:?}"))?,
        count,
        group,
        cpu: fraction(cpu)?,
        mem: fraction(mem)?,
        labels: map,
    })
}

pub fn write_rows(path: &Path, meta: &RowsMeta, rows: &[DataRow]) -> Result<(), FeatureError> {
    std::fs::write(path, rows_to_text(meta, rows))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<(RowsMeta, Vec<DataRow>), FeatureError> {
    rows_from_text(&std::fs::read_to_string(path)?)
}
