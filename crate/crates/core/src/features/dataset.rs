//! Dataset file.
//!
//! ```text
//! #affinity-dataset v1 <sha256 of every following byte>
//! #meta {"source_checksum":"..","seed":7,"created_micros":4001000000,...}
//! #dict {"A":["<none>","A|EQ|i:3",...],...}
//! count,group,cpu,mem,features
//! 1,A,0.5,0.25,7:1;19:1
//! ```
//!
//! `features` lists the one-hot columns (index 2 and up) as `index:value`
//! pairs joined by `;`; cpu and mem sit in columns 0 and 1.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_group, EncodedRow, FeatureDictionary, FeatureError, SparseVec};
use crate::container::{seal, unseal};
use crate::matcher::GroupLabel;

const MAGIC: &str = "affinity-dataset";
const COLUMNS: &str = "count,group,cpu,mem,features";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetMeta {
    /// Checksum of the rows file the dataset was encoded from.
    pub source_checksum: String,
    pub seed: u64,
    /// Trace time of the snapshot, in microseconds.
    pub created_micros: u64,
    /// Rows before duplicate configurations were collapsed.
    pub uncompressed_rows: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dictionary: FeatureDictionary,
    pub rows: Vec<EncodedRow>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn width(&self) -> usize {
        self.dictionary.width()
    }

    pub fn labels(&self) -> Vec<GroupLabel> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Same dictionary and metadata, rows picked by index.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            dictionary: self.dictionary.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut body = String::new();
        let meta = serde_json::to_string(&self.meta).expect("meta serializes");
        let dict = serde_json::to_string(&self.dictionary).expect("dictionary serializes");
        let _ = writeln!(body, "#meta {meta}\n#dict {dict}\n{COLUMNS}");
        for row in &self.rows {
            let _ = write!(
                body,
                "{},{},{},{},",
                row.count,
                row.label,
                row.features.get(0),
                row.features.get(1)
            );
            for (k, (i, v)) in row.features.iter().filter(|&(i, _)| i >= 2).enumerate() {
                if k > 0 {
                    body.push(';');
                }
                let _ = write!(body, "{i}:{v}");
            }
            body.push('\n');
        }
        seal(MAGIC, &body)
    }

    pub fn from_text(text: &str) -> Result<Dataset, FeatureError> {
        let body = unseal(MAGIC, text)?;
        let mut lines = body.lines();
        let mut block = |prefix: &str| -> Result<&str, FeatureError> {
            lines
                .next()
                .and_then(|l| l.strip_prefix(prefix))
                .ok_or_else(|| FeatureError::Malformed(format!("missing {prefix:?} line")))
        };
        let meta: DatasetMeta = serde_json::from_str(block("#meta ")?)
            .map_err(|e| FeatureError::Malformed(format!("meta: {e}")))?;
        let dictionary: FeatureDictionary = serde_json::from_str(block("#dict ")?)
            .map_err(|e| FeatureError::Malformed(format!("dictionary: {e}")))?;
        block(COLUMNS)?;
        let width = dictionary.width();
        let rows = lines
            .enumerate()
            .map(|(n, line)| {
                parse_row(line, width)
                    .map_err(|m| FeatureError::Malformed(format!("data row {}: {m}", n + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset {
            dictionary,
            rows,
            meta,
        })
    }
}

fn parse_row(line: &str, width: usize) -> Result<EncodedRow, String> {
    let fields: Vec<&str> = line.split(',').collect();
    let [count, group, cpu, mem, features] = fields[..] else {
        return Err(format!("expected 5 fields, found {}", fields.len()));
    };
    let count: u64 = count.parse().map_err(|_| format!("bad count {count:?}"))?;
    let label: GroupLabel = group.parse()?;
    check_group(count, label).map_err(|e| e.to_string())?;
    let fraction = |s: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .ok()
            .filter(|x| (0.0..=1.0).contains(x))
            .ok_or_else(|| format!("bad fraction {s:?}"))
    };
    let mut vec = SparseVec::new();
    for (i, s) in [cpu, mem].into_iter().enumerate() {
        let x = fraction(s)?;
        if x != 0.0 {
            vec.push(i, x);
        }
    }
    if !features.is_empty() {
        for pair in features.split(';') {
            let (i, v) = pair.split_once(':').ok_or_else(|| format!("bad pair {pair:?}"))?;
            let i: usize = i.parse().map_err(|_| format!("bad index {i:?}"))?;
            let v: f64 = v.parse().map_err(|_| format!("bad value {v:?}"))?;
            if i < 2 || i >= width || !vec.push(i, v) {
                return Err(format!("index {i} out of order or outside width {width}"));
            }
        }
    }
    Ok(EncodedRow {
        label,
        count,
        features: vec,
    })
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<(), FeatureError> {
    std::fs::write(path, ds.to_text())?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, FeatureError> {
    Dataset::from_text(&std::fs::read_to_string(path)?)
}
