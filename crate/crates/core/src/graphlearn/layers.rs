//! Graph convolution and graph attention layers.
//!
//! GCN: `H' = act(D^-1/2 (A+I) D^-1/2 H W + b)`.
//! GAT, per head: `e_ij = LeakyReLU(a^T [W h_i || W h_j])`, `alpha_ij` the
//! softmax of `e_ij` over `j` in `N(i) + {i}`, `h'_i = act(sum_j alpha_ij W h_j)`;
//! heads are concatenated.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tape::{Coeffs, Tape, Var};
use super::tensor::Tensor;
use super::{GraphError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::Identity => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    /// `in_dim x out_dim`
    pub w: Tensor,
    /// `1 x out_dim`
    pub b: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer {
    /// Per head, `in_dim x head_dim`.
    pub w: Vec<Tensor>,
    /// Per head, `2 head_dim x 1`.
    pub a: Vec<Tensor>,
    pub leaky_slope: f64,
    pub activation: Activation,
}

impl GatLayer {
    pub fn heads(&self) -> usize {
        self.w.len()
    }
}

/// Symmetric normalization `D^-1/2 A D^-1/2` of a weighted edge list that
/// already contains self-loops. Degrees are row sums.
pub fn gcn_normalize(n: usize, adjacency: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut deg = vec![0.0; n];
    for &(i, _, w) in adjacency {
        deg[i] += w;
    }
    adjacency
        .iter()
        .map(|&(i, j, w)| (i, j, w / (deg[i] * deg[j]).sqrt()))
        .collect()
}

/// Attention edge list `(i, j)` sorted by `i`, with `i` itself always among
/// its neighbors. Fails if a neighbor list lacks its own node.
pub fn attention_edges(neighbors: &[Vec<usize>]) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (i, ns) in neighbors.iter().enumerate() {
        if !ns.contains(&i) {
            return Err(GraphError::DimensionMismatch(format!(
                "node {i} lacks a self-loop"
            )));
        }
        let uniq: BTreeSet<usize> = ns.iter().copied().collect();
        if let Some(&j) = uniq.iter().find(|&&j| j >= neighbors.len()) {
            return Err(GraphError::DimensionMismatch(format!(
                "neighbor {j} out of range"
            )));
        }
        edges.extend(uniq.into_iter().map(|j| (i, j)));
    }
    Ok(edges)
}

/// Precomputed index structures of one attention layer input.
#[derive(Debug, Clone)]
pub struct AttentionIndex {
    pub n: usize,
    pub edges: Arc<Vec<(usize, usize)>>,
    pub src: Coeffs,
    pub dst: Coeffs,
    pub segments: Arc<Vec<usize>>,
}

impl AttentionIndex {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let src = edges
            .iter()
            .enumerate()
            .map(|(k, &(i, _))| (k, i, 1.0))
            .collect();
        let dst = edges
            .iter()
            .enumerate()
            .map(|(k, &(_, j))| (k, j, 1.0))
            .collect();
        let segments = edges.iter().map(|&(i, _)| i).collect();
        Self {
            n,
            edges: Arc::new(edges),
            src: Arc::new(src),
            dst: Arc::new(dst),
            segments: Arc::new(segments),
        }
    }
}

pub fn gcn_apply(
    tape: &mut Tape,
    x: Var,
    norm_adj: &Coeffs,
    n: usize,
    w: Var,
    b: Var,
    activation: Activation,
) -> Result<Var> {
    let xw = tape.matmul(x, w)?;
    let agg = tape.spmm(norm_adj.clone(), n, xw)?;
    let z = tape.add_row_bias(agg, b)?;
    Ok(activation.apply(tape, z))
}

/// One attention head; returns `(output, alpha)` with `alpha` an `E x 1`
/// column aligned with `index.edges`.
pub fn gat_head_apply(
    tape: &mut Tape,
    x: Var,
    index: &AttentionIndex,
    w: Var,
    a: Var,
    leaky_slope: f64,
) -> Result<(Var, Var)> {
    let wh = tape.matmul(x, w)?;
    let e = index.edges.len();
    let hi = tape.spmm(index.src.clone(), e, wh)?;
    let hj = tape.spmm(index.dst.clone(), e, wh)?;
    let pair = tape.concat_cols(&[hi, hj])?;
    let score = tape.matmul(pair, a)?;
    let score = tape.leaky_relu(score, leaky_slope);
    let alpha = tape.segment_softmax(score, index.segments.clone())?;
    let out = tape.edge_aggregate(alpha, wh, index.edges.clone(), index.n)?;
    Ok((out, alpha))
}

pub fn gat_apply(
    tape: &mut Tape,
    x: Var,
    index: &AttentionIndex,
    heads: &[(Var, Var)],
    leaky_slope: f64,
    activation: Activation,
) -> Result<Var> {
    let mut outs = Vec::with_capacity(heads.len());
    for &(w, a) in heads {
        outs.push(gat_head_apply(tape, x, index, w, a, leaky_slope)?.0);
    }
    let cat = if outs.len() == 1 {
        outs[0]
    } else {
        tape.concat_cols(&outs)?
    };
    Ok(activation.apply(tape, cat))
}

fn check_features(h: &Tensor, in_dim: usize, what: &str) -> Result<()> {
    if h.cols() != in_dim {
        return Err(GraphError::DimensionMismatch(format!(
            "{what}: features have {} columns, layer expects {in_dim}",
            h.cols()
        )));
    }
    Ok(())
}

/// GCN forward pass on a raw adjacency (symmetric, with self-loops).
pub fn gcn_forward(
    h: &Tensor,
    adjacency: &[(usize, usize, f64)],
    layer: &GcnLayer,
) -> Result<Tensor> {
    check_features(h, layer.w.rows(), "gcn")?;
    let n = h.rows();
    if adjacency.iter().any(|&(i, j, _)| i >= n || j >= n) {
        return Err(GraphError::DimensionMismatch(
            "adjacency index out of range".into(),
        ));
    }
    let norm: Coeffs = Arc::new(gcn_normalize(n, adjacency));
    let mut tape = Tape::new();
    let x = tape.constant(h.clone());
    let w = tape.constant(layer.w.clone());
    let b = tape.constant(layer.b.clone());
    let out = gcn_apply(&mut tape, x, &norm, n, w, b, layer.activation)?;
    Ok(tape.value(out).clone())
}

/// GAT forward pass; `neighbors[i]` must contain `i`.
pub fn gat_forward(h: &Tensor, neighbors: &[Vec<usize>], layer: &GatLayer) -> Result<Tensor> {
    Ok(gat_forward_with_attention(h, neighbors, layer)?.0)
}

/// Output plus, per head, the attention rows `alpha[i] = [(j, alpha_ij)]`.
#[allow(clippy::type_complexity)]
pub fn gat_forward_with_attention(
    h: &Tensor,
    neighbors: &[Vec<usize>],
    layer: &GatLayer,
) -> Result<(Tensor, Vec<Vec<Vec<(usize, f64)>>>)> {
    if layer.w.is_empty() || layer.w.len() != layer.a.len() {
        return Err(GraphError::DimensionMismatch(
            "GAT needs matching W and a per head".into(),
        ));
    }
    if neighbors.len() != h.rows() {
        return Err(GraphError::DimensionMismatch(
            "one neighbor list per node".into(),
        ));
    }
    for (w, a) in layer.w.iter().zip(&layer.a) {
        check_features(h, w.rows(), "gat")?;
        if a.rows() != 2 * w.cols() || a.cols() != 1 {
            return Err(GraphError::DimensionMismatch(
                "attention vector must be 2*head_dim x 1".into(),
            ));
        }
    }
    let index = AttentionIndex::new(h.rows(), attention_edges(neighbors)?);
    let mut tape = Tape::new();
    let x = tape.constant(h.clone());
    let mut outs = Vec::new();
    let mut attention = Vec::new();
    for (w, a) in layer.w.iter().zip(&layer.a) {
        let w = tape.constant(w.clone());
        let a = tape.constant(a.clone());
        let (out, alpha) = gat_head_apply(&mut tape, x, &index, w, a, layer.leaky_slope)?;
        outs.push(out);
        let mut rows = vec![Vec::new(); h.rows()];
        for (k, &(i, j)) in index.edges.iter().enumerate() {
            rows[i].push((j, tape.value(alpha).values[k]));
        }
        attention.push(rows);
    }
    let cat = tape.concat_cols(&outs)?;
    let out = layer.activation.apply(&mut tape, cat);
    Ok((tape.value(out).clone(), attention))
}
