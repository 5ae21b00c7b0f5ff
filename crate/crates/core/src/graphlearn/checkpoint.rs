//! Checkpoint files: one JSON document with the model configuration, the
//! comment vocabulary, every parameter tensor and training metadata.
//!
//! Tensor values are written with 17 significant digits, which is enough to
//! read back the identical `f64`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::model::{Model, ModelConfig};
use super::tensor::Tensor;
use super::train::TrainConfig;
use super::{GraphError, ParamStore, Result};
use crate::textrep::Vocabulary;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Prefix of parameters that are stored but never trained.
const FROZEN_PREFIX: &str = "encoder.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
    pub train_config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<Vec<f64>>,
    /// Pull requests the model saw; evaluation refuses to score them.
    pub train_pr_ids: BTreeSet<String>,
    /// Resolved run configuration of the producing command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model: Model,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize)]
struct TensorOut<'a> {
    shape: &'a [usize],
    values: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct CheckpointOut<'a> {
    format_version: u32,
    model_config: &'a ModelConfig,
    vocabulary: &'a Vocabulary,
    tensors: BTreeMap<&'a str, TensorOut<'a>>,
    metadata: &'a TrainingMetadata,
}

#[derive(Deserialize)]
struct TensorIn {
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointIn {
    format_version: u32,
    model_config: ModelConfig,
    vocabulary: Vocabulary,
    tensors: BTreeMap<String, TensorIn>,
    metadata: TrainingMetadata,
}

fn raw_f64(v: f64) -> Result<Box<RawValue>> {
    if !v.is_finite() {
        return Err(GraphError::NonFinite("parameter value".into()));
    }
    RawValue::from_string(format!("{v:.16e}")).map_err(|e| GraphError::Checkpoint(e.to_string()))
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let mut tensors = BTreeMap::new();
        for (name, t) in &self.model.params {
            let values = t
                .values
                .iter()
                .map(|&v| raw_f64(v))
                .collect::<Result<Vec<_>>>()?;
            tensors.insert(
                name.as_str(),
                TensorOut {
                    shape: &t.shape,
                    values,
                },
            );
        }
        let out = CheckpointOut {
            format_version: self.format_version,
            model_config: &self.model.config,
            vocabulary: &self.model.vocabulary,
            tensors,
            metadata: &self.metadata,
        };
        let mut s =
            serde_json::to_string(&out).map_err(|e| GraphError::Checkpoint(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CheckpointIn =
            serde_json::from_str(text).map_err(|e| GraphError::Checkpoint(e.to_string()))?;
        if raw.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(GraphError::Checkpoint(format!(
                "unsupported format_version {} (expected {CHECKPOINT_FORMAT_VERSION})",
                raw.format_version
            )));
        }
        raw.model_config.validate()?;
        let mut params = ParamStore::new();
        for (name, t) in raw.tensors {
            let mut tensor = Tensor::new(t.shape, t.values)?;
            tensor.requires_grad = !name.starts_with(FROZEN_PREFIX);
            params.insert(name, tensor);
        }
        Ok(Self {
            format_version: raw.format_version,
            model: Model {
                config: raw.model_config,
                params,
                vocabulary: raw.vocabulary,
            },
            metadata: raw.metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
