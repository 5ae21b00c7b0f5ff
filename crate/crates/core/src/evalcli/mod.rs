//! Metrics, annotated prediction reports, run configuration and the
//! `mcr-graph` command-line driver.

mod cli;
mod config;
mod metrics;
mod report;

use thiserror::Error;

pub use cli::{cli_main, Cli, Command};
pub use config::{RunConfig, RUN_CONFIG_KEYS};
pub use metrics::{
    classification_report, evaluate_classification, evaluate_regression, roc_auc, ClassMetrics,
    MetricsReport, RegressionMetrics,
};
pub use report::{predict_report, PredictionRecord, ReportDocument, ReportLine};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no samples to evaluate")]
    EmptyInput,
    #[error("ROC-AUC needs both classes")]
    SingleClassAuc,
    #[error("{0} predictions for {1} labels")]
    Misaligned(usize, usize),
    #[error("label {0} outside the class range")]
    InvalidLabel(usize),
    #[error("scores must not be NaN")]
    NonFinite,
    #[error("checkpoint does not fit this input: {0}")]
    ConfigMismatch(String),
    #[error("evaluation data overlaps the training split: {0}")]
    Leakage(String),
    #[error(transparent)]
    Graph(#[from] crate::graphlearn::GraphError),
}

pub type Result<T> = std::result::Result<T, EvalError>;
