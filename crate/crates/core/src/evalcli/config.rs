use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graphlearn::{GraphError, ModelConfig, Task, TrainConfig};
use crate::labeling::DEFAULT_STABILITY_WINDOW;

/// Top-level keys accepted in a run configuration file.
pub const RUN_CONFIG_KEYS: [&str; 8] = [
    "task",
    "seed",
    "ratio",
    "stability_window",
    "threshold",
    "salt",
    "model",
    "train",
];

/// Resolved settings of one command. Loaded from a JSON file, then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub ratio: f64,
    pub stability_window: u32,
    pub threshold: f64,
    /// Salt for author pseudonyms during ingestion.
    pub salt: String,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Likelihood,
            seed: 0,
            ratio: 0.8,
            stability_window: DEFAULT_STABILITY_WINDOW,
            threshold: 0.5,
            salt: String::new(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Flag values; `None` keeps the file (or default) value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<Task>,
    pub seed: Option<u64>,
    pub ratio: Option<f64>,
    pub stability_window: Option<u32>,
    pub threshold: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, GraphError> {
        match path {
            Some(p) => Self::from_json(&std::fs::read_to_string(p)?),
            None => Ok(Self::default()),
        }
    }

    /// Applies flags over file values. The task and seed are copied into
    /// the model and training sections so every artifact agrees.
    pub fn merge(mut self, o: &Overrides) -> Result<Self, GraphError> {
        if let Some(t) = o.task {
            self.task = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(r) = o.ratio {
            self.ratio = r;
        }
        if let Some(w) = o.stability_window {
            self.stability_window = w;
        }
        if let Some(t) = o.threshold {
            self.threshold = t;
        }
        self.model.task = self.task;
        self.train.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(GraphError::Config(format!(
                "ratio {} must lie in (0, 1)",
                self.ratio
            )));
        }
        if self.stability_window == 0 {
            return Err(GraphError::Config(
                "stability window must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(GraphError::Config(format!(
                "threshold {} must lie in [0, 1]",
                self.threshold
            )));
        }
        self.train.validate()
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serializes")
    }
}
