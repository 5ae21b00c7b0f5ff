//! Learnability harness: train on planted-rule graphs, score held-out ones.

use std::time::{Duration, Instant};

use mcr_graph::evalcli::classification_report;
use mcr_graph::graphlearn::{
    node_probabilities, train, Checkpoint, LayerType, ModelConfig, NodeExample, Task, TaskDataset,
    TrainConfig,
};

use super::planted;

pub const GRAPHS: usize = 30;
pub const TRAIN_GRAPHS: usize = 24;
pub const EPOCHS: usize = 200;

#[derive(Debug, Clone)]
pub struct Learnability {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_macro_f1: f64,
    /// Mean per-class recall on the held-out graphs.
    pub test_balanced_accuracy: f64,
    pub epoch_losses: Vec<f64>,
    pub checkpoint: Checkpoint,
    pub elapsed: Duration,
}

fn score(
    model: &mcr_graph::graphlearn::Model,
    examples: &[NodeExample],
    classes: usize,
) -> (f64, f64, f64) {
    let (mut pred, mut gold) = (Vec::new(), Vec::new());
    for e in examples {
        let p = node_probabilities(model, &e.graph).unwrap();
        for (i, y) in e.targets.iter().enumerate() {
            if let Some(y) = *y {
                let row = p.row(i);
                pred.push((0..row.len()).fold(0, |b, k| if row[k] > row[b] { k } else { b }));
                gold.push(y);
            }
        }
    }
    let r = classification_report(&pred, &gold, classes).unwrap();
    let present: Vec<f64> = r
        .per_class
        .iter()
        .filter(|c| c.support > 0)
        .map(|c| c.recall)
        .collect();
    (
        r.accuracy.unwrap(),
        r.macro_f1.unwrap(),
        present.iter().sum::<f64>() / present.len() as f64,
    )
}

/// Trains `task` with `layer` on the first 24 of 30 planted graphs.
pub fn run(task: Task, layer: LayerType, seed: u64) -> Learnability {
    run_with(task, layer, seed, ModelConfig::default().dropout)
}

pub fn run_with(task: Task, layer: LayerType, seed: u64, dropout: f64) -> Learnability {
    let graphs = planted::corpus(seed, GRAPHS);
    let rule = match task {
        Task::Topic => planted::topic_targets,
        _ => planted::likelihood_targets,
    };
    let examples = planted::examples(&graphs, rule);
    let (train_set, test_set) = examples.split_at(TRAIN_GRAPHS);
    let model_cfg = ModelConfig {
        task,
        layer,
        dropout,
        ..ModelConfig::default()
    };
    let train_cfg = TrainConfig {
        epochs: EPOCHS,
        seed,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let ckpt = train(
        &TaskDataset::Nodes(train_set.to_vec()),
        &model_cfg,
        &train_cfg,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let classes = task.output_width();
    let (train_accuracy, _, _) = score(&ckpt.model, train_set, classes);
    let (test_accuracy, test_macro_f1, test_balanced_accuracy) =
        score(&ckpt.model, test_set, classes);
    Learnability {
        train_accuracy,
        test_accuracy,
        test_macro_f1,
        test_balanced_accuracy,
        epoch_losses: ckpt.metadata.epoch_losses.clone(),
        checkpoint: ckpt,
        elapsed,
    }
}
