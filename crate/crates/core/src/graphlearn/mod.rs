//! Desk-scale graph learning: matrices with reverse-mode gradients, GCN and
//! GAT layers, task heads, losses, Adam, training loops and checkpoints.

mod checkpoint;
mod data;
pub mod gradcheck;
mod layers;
mod model;
mod optim;
mod tape;
mod tensor;
mod train;

use std::collections::BTreeMap;

use thiserror::Error;

pub use checkpoint::{Checkpoint, TrainingMetadata, CHECKPOINT_FORMAT_VERSION};
pub use data::{comment_examples, node_examples, node_targets};
pub use layers::{
    attention_edges, gat_apply, gat_forward, gat_forward_with_attention, gat_head_apply, gcn_apply,
    gcn_forward, gcn_normalize, Activation, AttentionIndex, GatLayer, GcnLayer,
};
pub use model::{
    forward_task, graph_forward, node_embeddings, node_features, node_probabilities,
    quality_forward, quality_inputs, token_row, Dropout, GraphInputs, LayerType, Model,
    ModelConfig, QualityInput, Task, TaskInput, KIND_DIM,
};
pub use optim::{adam_step, AdamState};
pub use tape::{sigmoid, softmax_rows, Coeffs, Gradients, Tape, Var};
pub use tensor::Tensor;
pub use train::{
    class_weights, evaluate_accuracy, train, CommentExample, NodeExample, TaskDataset, TrainConfig,
};

/// Named parameters in a stable order.
pub type ParamStore = BTreeMap<String, Tensor>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no labeled entries under the mask")]
    EmptyMask,
    #[error("dataset has no labeled examples")]
    EmptyDataset,
    #[error("loss has no recorded lineage")]
    GraphDetached,
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Label(#[from] crate::labeling::LabelError),
}

pub type Result<T> = std::result::Result<T, GraphError>;
