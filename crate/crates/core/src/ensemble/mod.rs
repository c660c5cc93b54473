//! Hard-voting ensemble, train/test splitting, metrics and the repeated
//! split/train/evaluate protocol.

mod artifact;
mod metrics;
mod protocol;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use artifact::{read_model, write_model, ModelArtifact, ModelFile, ModelMeta};
pub use metrics::{evaluate, render_confusion_matrix, ClassMetrics, EvaluationReport};
pub use protocol::{run_protocol, ClassAggregate, ProtocolReport, RunRecord, RunTiming};

use crate::classifiers::{fit, train, ClassifierError, ClassifierKind, ClassifierSpec, TrainedModel};
use crate::features::{Dataset, FeatureError, SparseVec};
use crate::matcher::GroupLabel;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0} row(s); a split needs at least 2")]
    TooFewRows(usize),
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("invalid evaluation settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    File(#[from] FeatureError),
}

impl EvalError {
    pub fn kind(&self) -> &'static str {
        match self {
            EvalError::TooFewRows(_) => "TooFewRows",
            EvalError::LengthMismatch { .. } => "LengthMismatch",
            EvalError::InvalidSettings(_) => "InvalidSettings",
            EvalError::Classifier(e) => e.kind(),
            EvalError::File(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        SplitSpec { fraction: 0.75, seed }
    }
}

/// Shuffles row indices with the split seed and cuts after
/// `floor(n * fraction)` rows, kept within `1..=n-1`.
pub fn train_test_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), EvalError> {
    if !(spec.fraction > 0.0 && spec.fraction < 1.0) {
        return Err(EvalError::InvalidSettings(format!(
            "train fraction {} is not strictly between 0 and 1",
            spec.fraction
        )));
    }
    let n = ds.rows.len();
    if n < 2 {
        return Err(EvalError::TooFewRows(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n_train = ((n as f64 * spec.fraction).floor() as usize).clamp(1, n - 1);
    Ok((ds.subset(&order[..n_train]), ds.subset(&order[n_train..])))
}

/// Fitted members in voting order: MLP, RIDGE, SGD_HINGE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingEnsemble {
    pub members: Vec<TrainedModel>,
}

pub const MEMBER_KINDS: [ClassifierKind; 3] = [ClassifierKind::Mlp, ClassifierKind::Ridge, ClassifierKind::SgdHinge];

impl VotingEnsemble {
    pub fn width(&self) -> usize {
        self.members[0].width
    }

    /// Sorted union of the members' classes.
    pub fn classes(&self) -> Vec<GroupLabel> {
        let mut all: Vec<GroupLabel> = self.members.iter().flat_map(|m| m.classes.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn predict_vectors(&self, xs: &[SparseVec]) -> Result<Vec<GroupLabel>, ClassifierError> {
        let votes = self
            .members
            .iter()
            .map(|m| m.predict_vectors(xs))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..xs.len())
            .map(|i| hard_vote(votes.iter().map(|v| v[i])))
            .collect())
    }
}

/// Label with the most votes; the smallest label wins ties.
pub fn hard_vote(votes: impl IntoIterator<Item = GroupLabel>) -> GroupLabel {
    let mut tally: BTreeMap<GroupLabel, usize> = BTreeMap::new();
    for v in votes {
        *tally.entry(v).or_default() += 1;
    }
    let mut best: Option<(GroupLabel, usize)> = None;
    for (label, n) in tally {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((label, n));
        }
    }
    best.expect("at least one vote").0
}

fn member_specs(seed: u64) -> Vec<ClassifierSpec> {
    MEMBER_KINDS.iter().map(|&k| ClassifierSpec::new(k, seed)).collect()
}

/// Fits the three members concurrently, each seeded with `seed`.
pub fn train_ensemble(data: &Dataset, seed: u64) -> Result<VotingEnsemble, ClassifierError> {
    use rayon::prelude::*;
    let members = member_specs(seed)
        .par_iter()
        .map(|spec| train(spec, data))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VotingEnsemble { members })
}

/// Like [`train_ensemble`] without the two-label check.
pub fn fit_ensemble(rows: &[crate::features::EncodedRow], width: usize, seed: u64) -> Result<VotingEnsemble, ClassifierError> {
    use rayon::prelude::*;
    let members = member_specs(seed)
        .par_iter()
        .map(|spec| fit(spec, rows, width))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VotingEnsemble { members })
}

pub fn predict_ensemble(e: &VotingEnsemble, data: &Dataset) -> Result<Vec<GroupLabel>, ClassifierError> {
    if data.width() != e.width() {
        return Err(ClassifierError::WidthMismatch {
            expected: e.width(),
            found: data.width(),
        });
    }
    let xs: Vec<SparseVec> = data.rows.iter().map(|r| r.features.clone()).collect();
    e.predict_vectors(&xs)
}
