//! Multiclass classifiers over sparse one-hot rows.

mod gnb;
mod knn;
mod linear;
mod mlp;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use linear::{ridge_normal_residual, RidgeSolver};
pub use mlp::{mlp_loss_and_gradient, softmax, MlpParams};
pub use tree::{depth as tree_depth, TreeNode};

use crate::features::{Dataset, EncodedRow, SparseVec};
use crate::matcher::GroupLabel;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),
    #[error("feature width {found} does not match the model's {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid classifier spec: {0}")]
    InvalidSpec(String),
}

impl ClassifierError {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierError::DegenerateData(_) => "DegenerateData",
            ClassifierError::NonFiniteLoss(_) => "NonFiniteLoss",
            ClassifierError::WidthMismatch { .. } => "WidthMismatch",
            ClassifierError::InvalidSpec(_) => "InvalidSpec",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassifierKind {
    Ridge,
    SgdHinge,
    Mlp,
    Knn,
    Tree,
    Gnb,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::Ridge,
        ClassifierKind::SgdHinge,
        ClassifierKind::Mlp,
        ClassifierKind::Knn,
        ClassifierKind::Tree,
        ClassifierKind::Gnb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Ridge => "RIDGE",
            ClassifierKind::SgdHinge => "SGD_HINGE",
            ClassifierKind::Mlp => "MLP",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Tree => "TREE",
            ClassifierKind::Gnb => "GNB",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ClassifierError::InvalidSpec(format!("unknown classifier {s:?}")))
    }
}

/// Classifier kind, hyperparameters and seed. Fields a kind does not use
/// are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub seed: u64,
    /// L2 strength (RIDGE, SGD_HINGE).
    pub alpha: f64,
    /// Passes over the data (SGD_HINGE, MLP).
    pub epochs: usize,
    /// Initial SGD step.
    pub eta0: f64,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Minimum epoch-loss improvement that resets MLP patience.
    pub tol: f64,
    pub patience: usize,
    pub k: usize,
    pub max_depth: usize,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        let alpha = match kind {
            ClassifierKind::Ridge => 0.3,
            _ => 1e-4,
        };
        let epochs = match kind {
            ClassifierKind::SgdHinge => 100,
            _ => 200,
        };
        ClassifierSpec {
            kind,
            seed,
            alpha,
            epochs,
            eta0: 0.1,
            hidden: vec![30, 30],
            learning_rate: 1e-3,
            batch_size: 200,
            tol: 1e-4,
            patience: 10,
            k: 3,
            max_depth: 15,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidSpec(m.to_string()));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.alpha) || !positive(self.eta0) || !positive(self.learning_rate) {
            return bad("alpha, eta0 and learning_rate must be positive and finite");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return bad("epochs, batch_size and patience must be at least 1");
        }
        if self.k == 0 || self.max_depth == 0 {
            return bad("k and max_depth must be at least 1");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer sizes must be at least 1");
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return bad("tol must be a non-negative number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    /// One weight vector per class; decision value is `w·x`.
    Linear { weights: Vec<Vec<f64>> },
    Mlp(MlpParams),
    Knn {
        k: usize,
        rows: Vec<SparseVec>,
        labels: Vec<usize>,
    },
    Tree { nodes: Vec<TreeNode> },
    Gnb {
        log_prior: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub rows: usize,
    pub epochs_run: Option<usize>,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    /// Sorted labels seen in training; parameter rows follow this order.
    pub classes: Vec<GroupLabel>,
    pub width: usize,
    pub params: ModelParams,
    pub meta: TrainMeta,
}

/// Index of the largest value; the first wins ties, which with sorted
/// classes means the smallest label.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn class_indices(rows: &[EncodedRow]) -> (Vec<GroupLabel>, Vec<usize>) {
    let mut classes: Vec<GroupLabel> = rows.iter().map(|r| r.label).collect();
    classes.sort_unstable();
    classes.dedup();
    let y = rows
        .iter()
        .map(|r| classes.binary_search(&r.label).expect("label collected above"))
        .collect();
    (classes, y)
}

fn check_width(rows: impl IntoIterator<Item = impl AsRef<SparseVec>>, width: usize) -> Result<(), ClassifierError> {
    for r in rows {
        if let Some(max) = r.as_ref().max_index() {
            if max >= width {
                return Err(ClassifierError::WidthMismatch {
                    expected: width,
                    found: max + 1,
                });
            }
        }
    }
    Ok(())
}

impl AsRef<SparseVec> for EncodedRow {
    fn as_ref(&self) -> &SparseVec {
        &self.features
    }
}

/// Fits on `data`, which must hold at least two labels.
pub fn train(spec: &ClassifierSpec, data: &Dataset) -> Result<TrainedModel, ClassifierError> {
    let distinct = {
        let mut labels = data.labels();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    };
    if distinct < 2 {
        return Err(ClassifierError::DegenerateData(format!(
            "{distinct} distinct label(s); at least 2 are needed"
        )));
    }
    fit(spec, &data.rows, data.width())
}

/// Fits without the two-label requirement; a single-label model always
/// predicts that label.
pub fn fit(spec: &ClassifierSpec, rows: &[EncodedRow], width: usize) -> Result<TrainedModel, ClassifierError> {
    spec.validate()?;
    if rows.is_empty() {
        return Err(ClassifierError::DegenerateData("no rows".into()));
    }
    if width == 0 {
        return Err(ClassifierError::DegenerateData("zero-width features".into()));
    }
    check_width(rows, width)?;
    let (classes, y) = class_indices(rows);
    let xs: Vec<&SparseVec> = rows.iter().map(|r| &r.features).collect();
    let mut meta = TrainMeta {
        seed: spec.seed,
        rows: rows.len(),
        ..Default::default()
    };
    let params = match spec.kind {
        ClassifierKind::Ridge => ModelParams::Linear {
            weights: linear::fit_ridge(&xs, &y, classes.len(), width, spec.alpha),
        },
        ClassifierKind::SgdHinge => {
            let (weights, loss) = linear::fit_sgd_hinge(&xs, &y, classes.len(), width, spec)?;
            meta.epochs_run = Some(spec.epochs);
            meta.final_loss = Some(loss);
            ModelParams::Linear { weights }
        }
        ClassifierKind::Mlp => {
            let (params, epochs, loss) = mlp::fit(&xs, &y, classes.len(), width, spec)?;
            meta.epochs_run = Some(epochs);
            meta.final_loss = Some(loss);
            ModelParams::Mlp(params)
        }
        ClassifierKind::Knn => ModelParams::Knn {
            k: spec.k,
            rows: xs.iter().map(|x| (*x).clone()).collect(),
            labels: y,
        },
        ClassifierKind::Tree => ModelParams::Tree {
            nodes: tree::fit(&xs, &y, classes.len(), width, spec.max_depth),
        },
        ClassifierKind::Gnb => {
            let (log_prior, means, variances) = gnb::fit(&xs, &y, classes.len(), width);
            ModelParams::Gnb {
                log_prior,
                means,
                variances,
            }
        }
    };
    Ok(TrainedModel {
        kind: spec.kind,
        classes,
        width,
        params,
        meta,
    })
}

impl TrainedModel {
    /// Per-class scores whose argmax is the prediction: decision values,
    /// class probabilities, neighbour votes or log-posteriors.
    pub fn scores(&self, x: &SparseVec) -> Vec<f64> {
        match &self.params {
            ModelParams::Linear { weights } => weights.iter().map(|w| x.dot(w)).collect(),
            ModelParams::Mlp(p) => p.predict_proba(x),
            ModelParams::Knn { k, rows, labels } => {
                knn::votes(rows, labels, self.classes.len(), *k, x)
            }
            ModelParams::Tree { nodes } => tree::leaf(nodes, x).to_vec(),
            ModelParams::Gnb {
                log_prior,
                means,
                variances,
            } => gnb::log_posterior(log_prior, means, variances, x),
        }
    }

    pub fn predict_one(&self, x: &SparseVec) -> GroupLabel {
        self.classes[argmax(&self.scores(x))]
    }

    /// Predicts each vector; fails if any index lies beyond the model's width.
    pub fn predict_vectors(&self, xs: &[SparseVec]) -> Result<Vec<GroupLabel>, ClassifierError> {
        check_width(xs, self.width)?;
        use rayon::prelude::*;
        Ok(xs.par_iter().map(|x| self.predict_one(x)).collect())
    }
}

/// Predicts every row of `data`, whose dictionary width must equal the
/// model's.
pub fn predict(model: &TrainedModel, data: &Dataset) -> Result<Vec<GroupLabel>, ClassifierError> {
    if data.width() != model.width {
        return Err(ClassifierError::WidthMismatch {
            expected: model.width,
            found: data.width(),
        });
    }
    let xs: Vec<SparseVec> = data.rows.iter().map(|r| r.features.clone()).collect();
    model.predict_vectors(&xs)
}
