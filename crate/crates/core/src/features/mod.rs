//! Dataset construction: canonical constraint labels become categorical
//! features, one-hot encoded with the first category of every attribute
//! dropped.
//!
//! Column layout: 0 is cpu, 1 is mem, then one block per attribute in name
//! order holding that attribute's categories after the first.

mod dataset;
mod rows;
mod sparse;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dataset::{read_dataset, write_dataset, Dataset, DatasetMeta};
pub use rows::{read_rows, rows_from_text, rows_to_text, write_rows, RowsMeta};
pub use sparse::SparseVec;

use crate::constraint::canonical_label;
use crate::container::SealError;
use crate::matcher::{classify_group, GroupLabel, SnapshotRow};

/// Category of an attribute a row does not constrain.
pub const NONE_CATEGORY: &str = "<none>";

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("no rows to build a dictionary from")]
    EmptyDataset,
    #[error("label {0:?} is not in the dictionary")]
    UnknownCategory(String),
    #[error("format version mismatch: {0}")]
    FormatVersionMismatch(String),
    #[error("checksum mismatch: header says {expected}, content hashes to {found}")]
    ChecksumMismatch { expected: String, found: String },
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FeatureError {
    pub fn kind(&self) -> &'static str {
        match self {
            FeatureError::EmptyDataset => "EmptyDataset",
            FeatureError::UnknownCategory(_) => "UnknownCategory",
            FeatureError::FormatVersionMismatch(_) => "FormatVersionMismatch",
            FeatureError::ChecksumMismatch { .. } => "ChecksumMismatch",
            FeatureError::Malformed(_) => "MalformedData",
            FeatureError::Io(_) => "IOFailure",
        }
    }
}

impl From<SealError> for FeatureError {
    fn from(e: SealError) -> Self {
        match e {
            SealError::Version(m) => FeatureError::FormatVersionMismatch(m),
            SealError::Checksum { expected, found } => {
                FeatureError::ChecksumMismatch { expected, found }
            }
        }
    }
}

/// One task's categorical content before encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub job_id: u64,
    pub task_index: u32,
    pub count: u64,
    pub group: GroupLabel,
    pub cpu: f64,
    pub mem: f64,
    /// Attribute name to canonical constraint label.
    pub labels: BTreeMap<String, String>,
}

impl DataRow {
    pub fn from_snapshot(row: &SnapshotRow) -> Self {
        DataRow {
            job_id: row.spec.id.job,
            task_index: row.spec.id.index,
            count: row.count,
            group: row.group,
            cpu: row.spec.cpu,
            mem: row.spec.mem,
            labels: row
                .constraints
                .iter()
                .map(|c| (c.attribute.clone(), canonical_label(c)))
                .collect(),
        }
    }
}

/// Attribute a canonical label belongs to.
pub fn label_attribute(label: &str) -> Option<&str> {
    label.split_once('|').map(|(a, _)| a)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, Vec<String>>", into = "BTreeMap<String, Vec<String>>")]
pub struct FeatureDictionary {
    categories: BTreeMap<String, Vec<String>>,
    offsets: BTreeMap<String, usize>,
    width: usize,
}

impl From<BTreeMap<String, Vec<String>>> for FeatureDictionary {
    fn from(categories: BTreeMap<String, Vec<String>>) -> Self {
        FeatureDictionary::from_categories(categories)
    }
}

impl From<FeatureDictionary> for BTreeMap<String, Vec<String>> {
    fn from(d: FeatureDictionary) -> Self {
        d.categories
    }
}

impl FeatureDictionary {
    /// Builds from per-attribute category lists, sorting and de-duplicating them.
    pub fn from_categories(categories: BTreeMap<String, Vec<String>>) -> Self {
        let mut offsets = BTreeMap::new();
        let mut width = 2;
        let categories: BTreeMap<String, Vec<String>> = categories
            .into_iter()
            .map(|(attr, cats)| {
                let cats: Vec<String> = cats.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
                offsets.insert(attr.clone(), width);
                width += cats.len().saturating_sub(1);
                (attr, cats)
            })
            .collect();
        FeatureDictionary {
            categories,
            offsets,
            width,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.categories.iter().map(|(a, c)| (a.as_str(), c.as_slice()))
    }

    pub fn categories(&self, attribute: &str) -> Option<&[String]> {
        self.categories.get(attribute).map(Vec::as_slice)
    }

    /// Column of a category, `None` for a dropped first category.
    pub fn column(&self, attribute: &str, category: &str) -> Result<Option<usize>, FeatureError> {
        let cats = self
            .categories
            .get(attribute)
            .ok_or_else(|| FeatureError::UnknownCategory(category.to_string()))?;
        match cats.binary_search_by(|c| c.as_str().cmp(category)) {
            Ok(0) => Ok(None),
            Ok(p) => Ok(Some(self.offsets[attribute] + p - 1)),
            Err(_) => Err(FeatureError::UnknownCategory(category.to_string())),
        }
    }
}

/// Collects the categories seen per attribute. `<none>` joins an attribute
/// whenever some row leaves it unconstrained.
pub fn build_dictionary(rows: &[DataRow]) -> Result<FeatureDictionary, FeatureError> {
    if rows.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    type Census = BTreeMap<String, (usize, BTreeSet<String>)>;
    let census: Census = rows
        .par_iter()
        .fold(Census::new, |mut acc, row| {
            for (attr, label) in &row.labels {
                let entry = acc.entry(attr.clone()).or_default();
                entry.0 += 1;
                entry.1.insert(label.clone());
            }
            acc
        })
        .reduce(Census::new, |mut a, b| {
            for (attr, (n, labels)) in b {
                let entry = a.entry(attr).or_default();
                entry.0 += n;
                entry.1.extend(labels);
            }
            a
        });
    let categories = census
        .into_iter()
        .map(|(attr, (n, mut labels))| {
            if n < rows.len() {
                labels.insert(NONE_CATEGORY.to_string());
            }
            (attr, labels.into_iter().collect())
        })
        .collect();
    Ok(FeatureDictionary::from_categories(categories))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedRow {
    pub label: GroupLabel,
    pub count: u64,
    pub features: SparseVec,
}

pub fn encode(row: &DataRow, dict: &FeatureDictionary) -> Result<EncodedRow, FeatureError> {
    if let Some(attr) = row.labels.keys().find(|a| dict.categories(a).is_none()) {
        return Err(FeatureError::UnknownCategory(row.labels[attr].clone()));
    }
    let mut features = SparseVec::new();
    if row.cpu != 0.0 {
        features.push(0, row.cpu);
    }
    if row.mem != 0.0 {
        features.push(1, row.mem);
    }
    for (attr, _) in dict.attributes() {
        let category = row.labels.get(attr).map_or(NONE_CATEGORY, String::as_str);
        if let Some(col) = dict.column(attr, category)? {
            features.push(col, 1.0);
        }
    }
    Ok(EncodedRow {
        label: row.group,
        count: row.count,
        features,
    })
}

pub fn encode_all(rows: &[DataRow], dict: &FeatureDictionary) -> Result<Vec<EncodedRow>, FeatureError> {
    rows.par_iter().map(|r| encode(r, dict)).collect()
}

/// Categorical content recovered from an encoded row.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedRow {
    pub count: u64,
    pub group: GroupLabel,
    pub cpu: f64,
    pub mem: f64,
    /// Constrained attributes only; `<none>` categories are omitted.
    pub labels: BTreeMap<String, String>,
}

pub fn decode(row: &EncodedRow, dict: &FeatureDictionary) -> Result<DecodedRow, FeatureError> {
    let mut chosen: BTreeMap<&str, usize> = BTreeMap::new();
    for (col, value) in row.features.iter().filter(|&(i, _)| i >= 2) {
        if value != 1.0 || col >= dict.width() {
            return Err(FeatureError::Malformed(format!("column {col} holds {value}")));
        }
        let (attr, offset) = dict
            .offsets
            .iter()
            .rev()
            .find(|(_, &o)| o <= col)
            .expect("column 2 and above belongs to a block");
        if chosen.insert(attr, col - offset + 1).is_some() {
            return Err(FeatureError::Malformed(format!("two categories set for {attr}")));
        }
    }
    let mut labels = BTreeMap::new();
    for (attr, cats) in dict.attributes() {
        let category = &cats[chosen.get(attr).copied().unwrap_or(0)];
        if category != NONE_CATEGORY {
            labels.insert(attr.to_string(), category.clone());
        }
    }
    Ok(DecodedRow {
        count: row.count,
        group: row.label,
        cpu: row.features.get(0),
        mem: row.features.get(1),
        labels,
    })
}

/// Collapses duplicate configurations within each job. Output is ordered by
/// job id, then by first occurrence; the first row of each configuration
/// represents it.
pub fn compress(rows: &[DataRow]) -> Vec<DataRow> {
    type Key<'a> = (&'a BTreeMap<String, String>, u64, u64, u64);
    let mut by_job: BTreeMap<u64, (Vec<&DataRow>, BTreeSet<Key>)> = BTreeMap::new();
    for row in rows {
        let (kept, seen) = by_job.entry(row.job_id).or_default();
        if seen.insert((&row.labels, row.cpu.to_bits(), row.mem.to_bits(), row.count)) {
            kept.push(row);
        }
    }
    by_job
        .into_values()
        .flat_map(|(kept, _)| kept)
        .cloned()
        .collect()
}

/// Checks a row's group against its count.
pub(crate) fn check_group(count: u64, group: GroupLabel) -> Result<(), FeatureError> {
    match classify_group(count) {
        Ok(g) if g == group => Ok(()),
        _ => Err(FeatureError::Malformed(format!(
            "group {group} does not match count {count}"
        ))),
    }
}
