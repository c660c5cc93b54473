//! Model file.
//!
//! ```text
//! #affinity-model v1 <sha256 of every following byte>
//! {"meta":{"seed":7,"dataset_checksum":".."},"model":{"Ensemble":{...}}}
//! ```
//!
//! The JSON body prints floats with round-trip precision, so a model read
//! back is bit-identical to the one written.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{predict_ensemble, train_ensemble, EvalError, VotingEnsemble};
use crate::classifiers::{predict, train, ClassifierError, ClassifierKind, ClassifierSpec, TrainedModel};
use crate::container::{seal, unseal};
use crate::features::{Dataset, FeatureError};
use crate::matcher::GroupLabel;

const MAGIC: &str = "affinity-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelArtifact {
    Single(TrainedModel),
    Ensemble(VotingEnsemble),
}

impl ModelArtifact {
    /// Trains the voting ensemble when `kind` is `None`, else one classifier
    /// with its default hyperparameters.
    pub fn train(data: &Dataset, seed: u64, kind: Option<ClassifierKind>) -> Result<Self, ClassifierError> {
        Ok(match kind {
            None => ModelArtifact::Ensemble(train_ensemble(data, seed)?),
            Some(k) => ModelArtifact::Single(train(&ClassifierSpec::new(k, seed), data)?),
        })
    }

    pub fn width(&self) -> usize {
        match self {
            ModelArtifact::Single(m) => m.width,
            ModelArtifact::Ensemble(e) => e.width(),
        }
    }

    pub fn classes(&self) -> Vec<GroupLabel> {
        match self {
            ModelArtifact::Single(m) => m.classes.clone(),
            ModelArtifact::Ensemble(e) => e.classes(),
        }
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<GroupLabel>, ClassifierError> {
        match self {
            ModelArtifact::Single(m) => predict(m, data),
            ModelArtifact::Ensemble(e) => predict_ensemble(e, data),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelMeta {
    pub seed: u64,
    /// Checksum of the dataset file the model was trained on.
    pub dataset_checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub meta: ModelMeta,
    pub model: ModelArtifact,
}

impl ModelFile {
    pub fn to_text(&self) -> String {
        let body = serde_json::to_string(self).expect("models serialize") + "\n";
        seal(MAGIC, &body)
    }

    pub fn from_text(text: &str) -> Result<Self, FeatureError> {
        let body = unseal(MAGIC, text)?;
        serde_json::from_str(body).map_err(|e| FeatureError::Malformed(format!("model body: {e}")))
    }
}

pub fn write_model(file: &ModelFile, path: &Path) -> Result<(), EvalError> {
    std::fs::write(path, file.to_text()).map_err(FeatureError::from)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile, EvalError> {
    let text = std::fs::read_to_string(path).map_err(FeatureError::from)?;
    Ok(ModelFile::from_text(&text)?)
}
