use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{gat_apply, gcn_apply, gcn_normalize, Activation, AttentionIndex};
use super::tape::{softmax_rows, Coeffs, Tape, Var};
use super::tensor::Tensor;
use super::{GraphError, ParamStore, Result};
use crate::astgraph::{to_adjacency, AstGraph, EdgeKind, NodeKind};
use crate::hash::stable_hash64;
use crate::textrep::Vocabulary;

pub const KIND_DIM: usize = NodeKind::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Task {
    Likelihood,
    Topic,
    Quality,
}

impl Task {
    pub fn output_width(self) -> usize {
        match self {
            Task::Likelihood => 2,
            Task::Topic => 5,
            Task::Quality => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Likelihood => "likelihood",
            Task::Topic => "topic",
            Task::Quality => "quality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LayerType {
    Gcn,
    Gat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub task: Task,
    pub layer: LayerType,
    /// Output width of each graph layer.
    pub hidden_dims: Vec<usize>,
    pub dropout: f64,
    pub kind_dim: usize,
    pub token_dim: usize,
    pub token_table_size: usize,
    pub heads: usize,
    pub leaky_slope: f64,
    /// Comment embedding width (QUALITY).
    pub comment_dim: usize,
    pub min_df: u32,
    pub max_vocab: usize,
    /// Frozen graph encoder (QUALITY).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder: Option<Box<ModelConfig>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            task: Task::Likelihood,
            layer: LayerType::Gcn,
            hidden_dims: vec![64, 64],
            dropout: 0.5,
            kind_dim: KIND_DIM,
            token_dim: 16,
            token_table_size: 1024,
            heads: 4,
            leaky_slope: 0.2,
            comment_dim: crate::textrep::DEFAULT_EMBEDDING_DIM,
            min_df: crate::textrep::DEFAULT_MIN_DF,
            max_vocab: crate::textrep::DEFAULT_MAX_VOCAB,
            encoder: None,
        }
    }
}

impl ModelConfig {
    pub fn input_dim(&self) -> usize {
        self.kind_dim + self.token_dim
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GraphError::Config(m.to_string()));
        if self.kind_dim != KIND_DIM {
            return bad("kind_dim must equal the number of node kinds (20)");
        }
        if self.task == Task::Quality {
            if self.comment_dim == 0 || self.min_df == 0 || self.max_vocab < 2 {
                return bad("quality model needs comment_dim >= 1, min_df >= 1, max_vocab >= 2");
            }
            return match &self.encoder {
                Some(enc) if enc.task == Task::Likelihood => enc.validate(),
                _ => bad("quality model needs a likelihood encoder"),
            };
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return bad("hidden_dims must be non-empty and positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.token_dim > 0 && self.token_table_size == 0 {
            return bad("token_table_size must be positive");
        }
        if self.layer == LayerType::Gat {
            if self.heads == 0 {
                return bad("heads must be at least 1");
            }
            if let Some(d) = self.hidden_dims.iter().find(|&&d| d % self.heads != 0) {
                return Err(GraphError::Config(format!(
                    "hidden width {d} is not divisible by {} heads",
                    self.heads
                )));
            }
        }
        Ok(())
    }

    pub fn embedding_dim(&self) -> usize {
        *self.hidden_dims.last().unwrap_or(&0)
    }
}

/// Parameters plus the configuration and vocabulary they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub vocabulary: Vocabulary,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let vals = (0..rows * cols)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    Tensor::matrix(rows, cols, vals).unwrap().trainable()
}

impl Model {
    /// Fresh graph model (LIKELIHOOD or TOPIC) with Glorot-uniform weights
    /// and zero biases.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if config.task == Task::Quality {
            return Err(GraphError::Config(
                "use Model::init_quality for QUALITY".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        if config.token_dim > 0 {
            let bound = 1.0 / (config.token_dim as f64).sqrt();
            let vals = (0..config.token_table_size * config.token_dim)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect();
            params.insert(
                "token_embedding".into(),
                Tensor::matrix(config.token_table_size, config.token_dim, vals)?.trainable(),
            );
        }
        let mut in_dim = config.input_dim();
        for (l, &out) in config.hidden_dims.iter().enumerate() {
            match config.layer {
                LayerType::Gcn => {
                    params.insert(format!("gcn{l}.w"), glorot(&mut rng, in_dim, out));
                    params.insert(format!("gcn{l}.b"), Tensor::zeros(1, out).trainable());
                }
                LayerType::Gat => {
                    let hd = out / config.heads;
                    for h in 0..config.heads {
                        params.insert(format!("gat{l}.head{h}.w"), glorot(&mut rng, in_dim, hd));
                        params.insert(format!("gat{l}.head{h}.a"), glorot(&mut rng, 2 * hd, 1));
                    }
                }
            }
            in_dim = out;
        }
        let k = config.task.output_width();
        params.insert("out.w".into(), glorot(&mut rng, in_dim, k));
        params.insert("out.b".into(), Tensor::zeros(1, k).trainable());
        Ok(Self {
            config: config.clone(),
            params,
            vocabulary: Vocabulary::default(),
        })
    }

    /// QUALITY head on top of a frozen LIKELIHOOD encoder; encoder
    /// parameters are copied under `encoder.` and marked frozen.
    pub fn init_quality(
        config: &ModelConfig,
        encoder: &Model,
        vocabulary: Vocabulary,
        seed: u64,
    ) -> Result<Self> {
        if encoder.config.task != Task::Likelihood {
            return Err(GraphError::Config(
                "quality encoder must be a likelihood model".into(),
            ));
        }
        let mut config = config.clone();
        config.task = Task::Quality;
        config.encoder = Some(Box::new(encoder.config.clone()));
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        for (name, t) in &encoder.params {
            let mut t = t.clone();
            t.requires_grad = false;
            params.insert(format!("encoder.{name}"), t);
        }
        let bound = 1.0 / (config.comment_dim as f64).sqrt();
        let mut table = Tensor::zeros(vocabulary.len(), config.comment_dim);
        for v in table.values.iter_mut().skip(config.comment_dim) {
            *v = rng.gen_range(-bound..=bound);
        }
        params.insert("comment_embedding".into(), table.trainable());
        let in_dim = config.comment_dim + encoder.config.embedding_dim();
        params.insert("out.w".into(), glorot(&mut rng, in_dim, 2));
        params.insert("out.b".into(), Tensor::zeros(1, 2).trainable());
        Ok(Self {
            config,
            params,
            vocabulary,
        })
    }

    /// The frozen encoder of a QUALITY model as a standalone model.
    pub fn encoder(&self) -> Result<Model> {
        let cfg = self
            .config
            .encoder
            .as_deref()
            .ok_or_else(|| GraphError::Config("model has no encoder".into()))?;
        let params = self
            .params
            .iter()
            .filter_map(|(k, v)| {
                k.strip_prefix("encoder.")
                    .map(|k| (k.to_string(), v.clone()))
            })
            .collect();
        Ok(Model {
            config: cfg.clone(),
            params,
            vocabulary: Vocabulary::default(),
        })
    }
}

/// Row of the token hash table for a node token.
pub fn token_row(token: &str, table_size: usize) -> usize {
    (stable_hash64(token.as_bytes()) % table_size as u64) as usize
}

/// Per-graph constants shared by every forward pass over that graph.
#[derive(Debug, Clone)]
pub struct GraphInputs {
    pub n: usize,
    pub kinds: Tensor,
    pub token_gather: Coeffs,
    pub norm_adj: Coeffs,
    pub attention: AttentionIndex,
}

impl GraphInputs {
    pub fn new(graph: &AstGraph, config: &ModelConfig) -> Self {
        let n = graph.nodes.len();
        let mut kinds = Tensor::zeros(n, KIND_DIM);
        let mut gather = Vec::new();
        for node in &graph.nodes {
            kinds.values[node.id * KIND_DIM + node.kind.index()] = 1.0;
            if let (Some(tok), true) = (&node.token, config.token_dim > 0) {
                gather.push((node.id, token_row(tok, config.token_table_size), 1.0));
            }
        }
        let adj = to_adjacency(graph, &[EdgeKind::Child, EdgeKind::NextSibling], true, true);
        let edges = adj.iter().map(|&(i, j, _)| (i, j)).collect();
        Self {
            n,
            kinds,
            token_gather: Arc::new(gather),
            norm_adj: Arc::new(gcn_normalize(n, &adj)),
            attention: AttentionIndex::new(n, edges),
        }
    }
}

/// Node feature matrix `n x (20 + token_dim)`: kind one-hot followed by the
/// hashed token embedding (zero when the node has no token).
pub fn node_features(
    graph: &AstGraph,
    config: &ModelConfig,
    token_table: Option<&Tensor>,
) -> Result<Tensor> {
    let inputs = GraphInputs::new(graph, config);
    let mut tape = Tape::new();
    let x = features_on_tape(&mut tape, &inputs, config, token_table.cloned())?;
    Ok(tape.value(x).clone())
}

fn features_on_tape(
    tape: &mut Tape,
    inputs: &GraphInputs,
    config: &ModelConfig,
    table: Option<Tensor>,
) -> Result<Var> {
    let kinds = tape.constant(inputs.kinds.clone());
    if config.token_dim == 0 {
        return Ok(kinds);
    }
    let table = table.unwrap_or_else(|| Tensor::zeros(config.token_table_size, config.token_dim));
    if table.rows() != config.token_table_size || table.cols() != config.token_dim {
        return Err(GraphError::DimensionMismatch(
            "token table does not match config".into(),
        ));
    }
    let t = tape.constant(table);
    features_from_table(tape, inputs, kinds, t)
}

fn features_from_table(
    tape: &mut Tape,
    inputs: &GraphInputs,
    kinds: Var,
    table: Var,
) -> Result<Var> {
    let tok = tape.spmm(inputs.token_gather.clone(), inputs.n, table)?;
    tape.concat_cols(&[kinds, tok])
}

/// Dropout state for training passes.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut ChaCha8Rng,
}

impl Dropout<'_> {
    fn apply(&mut self, tape: &mut Tape, x: Var) -> Result<Var> {
        if self.rate <= 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - self.rate;
        let len = tape.value(x).values.len();
        let mask: Vec<f64> = (0..len)
            .map(|_| {
                if self.rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        tape.mul_const(x, Arc::new(mask))
    }
}

/// Records a graph-model forward pass; returns `(last hidden layer, logits)`.
pub fn graph_forward(
    tape: &mut Tape,
    model: &Model,
    prefix: &str,
    inputs: &GraphInputs,
    mut dropout: Option<Dropout<'_>>,
) -> Result<(Var, Var)> {
    let cfg = &model.config;
    let p = |name: &str| format!("{prefix}{name}");
    let kinds = tape.constant(inputs.kinds.clone());
    let mut h = if cfg.token_dim > 0 {
        let table = tape.param(&model.params, &p("token_embedding"))?;
        features_from_table(tape, inputs, kinds, table)?
    } else {
        kinds
    };
    for (l, _) in cfg.hidden_dims.iter().enumerate() {
        if let Some(d) = dropout.as_mut() {
            h = d.apply(tape, h)?;
        }
        h = match cfg.layer {
            LayerType::Gcn => {
                let w = tape.param(&model.params, &p(&format!("gcn{l}.w")))?;
                let b = tape.param(&model.params, &p(&format!("gcn{l}.b")))?;
                gcn_apply(tape, h, &inputs.norm_adj, inputs.n, w, b, Activation::Relu)?
            }
            LayerType::Gat => {
                let mut heads = Vec::with_capacity(cfg.heads);
                for k in 0..cfg.heads {
                    let w = tape.param(&model.params, &p(&format!("gat{l}.head{k}.w")))?;
                    let a = tape.param(&model.params, &p(&format!("gat{l}.head{k}.a")))?;
                    heads.push((w, a));
                }
                gat_apply(
                    tape,
                    h,
                    &inputs.attention,
                    &heads,
                    cfg.leaky_slope,
                    Activation::Relu,
                )?
            }
        };
    }
    let hidden = h;
    if let Some(d) = dropout.as_mut() {
        h = d.apply(tape, h)?;
    }
    let w = tape.param(&model.params, &p("out.w"))?;
    let b = tape.param(&model.params, &p("out.b"))?;
    let z = tape.matmul(h, w)?;
    let logits = tape.add_row_bias(z, b)?;
    Ok((hidden, logits))
}

/// Hidden embedding of every node under an evaluation-mode graph model.
pub fn node_embeddings(model: &Model, graph: &AstGraph) -> Result<Tensor> {
    let inputs = GraphInputs::new(graph, &model.config);
    let mut tape = Tape::new();
    let (hidden, _) = graph_forward(&mut tape, model, "", &inputs, None)?;
    Ok(tape.value(hidden).clone())
}

/// One QUALITY query: a comment's token ids plus the frozen embedding of its
/// anchored node.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityInput {
    pub token_ids: Vec<usize>,
    pub node_embedding: Vec<f64>,
}

/// Records the QUALITY head; returns a `B x 2` matrix of sigmoid outputs
/// (actionability probability, clarity estimate).
pub fn quality_forward(tape: &mut Tape, model: &Model, batch: &[QualityInput]) -> Result<Var> {
    let cd = model.config.comment_dim;
    let hd = model
        .config
        .encoder
        .as_ref()
        .map_or(0, |e| e.embedding_dim());
    let vocab_rows = model
        .params
        .get("comment_embedding")
        .map_or(0, Tensor::rows);
    let mut pool = Vec::new();
    let mut node_rows = Vec::with_capacity(batch.len() * hd);
    for (r, q) in batch.iter().enumerate() {
        if q.node_embedding.len() != hd {
            return Err(GraphError::DimensionMismatch(format!(
                "node embedding of width {}, encoder width {hd}",
                q.node_embedding.len()
            )));
        }
        if let Some(&bad) = q.token_ids.iter().find(|&&t| t >= vocab_rows) {
            return Err(GraphError::DimensionMismatch(format!(
                "token id {bad} outside vocabulary"
            )));
        }
        let inv = 1.0 / q.token_ids.len().max(1) as f64;
        pool.extend(q.token_ids.iter().map(|&t| (r, t, inv)));
        node_rows.extend_from_slice(&q.node_embedding);
    }
    let table = tape.param(&model.params, "comment_embedding")?;
    let c = tape.spmm(Arc::new(pool), batch.len(), table)?;
    debug_assert_eq!(tape.value(c).cols(), cd);
    let nodes = tape.constant(Tensor::matrix(batch.len(), hd, node_rows)?);
    let z = tape.concat_cols(&[c, nodes])?;
    let w = tape.param(&model.params, "out.w")?;
    let b = tape.param(&model.params, "out.b")?;
    let lin = tape.matmul(z, w)?;
    let lin = tape.add_row_bias(lin, b)?;
    Ok(tape.sigmoid(lin))
}

/// Inputs of [`forward_task`].
pub enum TaskInput<'a> {
    Graph(&'a AstGraph),
    /// `(graph, anchored node id, comment tokens)` per comment.
    Comments(&'a [(&'a AstGraph, usize, Vec<String>)]),
}

/// Evaluation-mode forward pass. LIKELIHOOD/TOPIC return per-node logits;
/// QUALITY returns per-comment sigmoid outputs.
pub fn forward_task(model: &Model, input: TaskInput<'_>) -> Result<Tensor> {
    match (model.config.task, input) {
        (Task::Likelihood | Task::Topic, TaskInput::Graph(g)) => {
            let inputs = GraphInputs::new(g, &model.config);
            let mut tape = Tape::new();
            let (_, logits) = graph_forward(&mut tape, model, "", &inputs, None)?;
            Ok(tape.value(logits).clone())
        }
        (Task::Quality, TaskInput::Comments(items)) => {
            let batch = quality_inputs(model, items)?;
            let mut tape = Tape::new();
            let out = quality_forward(&mut tape, model, &batch)?;
            Ok(tape.value(out).clone())
        }
        (task, _) => Err(GraphError::Config(format!(
            "input kind does not match task {}",
            task.name()
        ))),
    }
}

/// Builds QUALITY inputs with the model's frozen encoder.
pub fn quality_inputs(
    model: &Model,
    items: &[(&AstGraph, usize, Vec<String>)],
) -> Result<Vec<QualityInput>> {
    let encoder = model.encoder()?;
    let mut out = Vec::with_capacity(items.len());
    let mut cache: Vec<(*const AstGraph, Tensor)> = Vec::new();
    for (g, node, tokens) in items {
        let ptr = *g as *const AstGraph;
        let emb = match cache.iter().find(|(p, _)| *p == ptr) {
            Some((_, e)) => e.clone(),
            None => {
                let e = node_embeddings(&encoder, g)?;
                cache.push((ptr, e.clone()));
                e
            }
        };
        if *node >= emb.rows() {
            return Err(GraphError::DimensionMismatch(format!(
                "node {node} outside graph"
            )));
        }
        out.push(QualityInput {
            token_ids: model.vocabulary.ids(tokens),
            node_embedding: emb.row(*node).to_vec(),
        });
    }
    Ok(out)
}

/// Softmax probabilities per node for a LIKELIHOOD/TOPIC model.
pub fn node_probabilities(model: &Model, graph: &AstGraph) -> Result<Tensor> {
    let logits = forward_task(model, TaskInput::Graph(graph))?;
    Tensor::matrix(logits.rows(), logits.cols(), softmax_rows(&logits))
}
