//! Reverse-mode automatic differentiation over matrices.
//!
//! A [`Tape`] records one forward pass. Parameters enter as named leaves,
//! every operation appends a node, and [`Tape::backward`] walks the nodes in
//! reverse to accumulate gradients. A fresh tape is built for every step.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::tensor::{matmul, matmul_nt, matmul_tn, Tensor};
use super::{GraphError, ParamStore, Result};

/// Constant sparse matrix as `(row, col, weight)` triples.
pub type Coeffs = Arc<Vec<(usize, usize, f64)>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    AddRowBias(Var, Var),
    Scale(Var, f64),
    MulConst(Var, Arc<Vec<f64>>),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Spmm(Coeffs, Var),
    ConcatCols(Vec<Var>),
    SelectCol(Var, usize),
    SegmentSoftmax(Var, Arc<Vec<usize>>),
    EdgeAggregate(Var, Var, Arc<Vec<(usize, usize)>>),
    SumAll(Var),
    CrossEntropy {
        logits: Var,
        targets: Arc<Vec<Option<usize>>>,
        weights: Arc<Vec<f64>>,
        probs: Vec<f64>,
        total_weight: f64,
    },
    Bce(Var, Arc<Vec<f64>>),
    Mse(Var, Arc<Vec<f64>>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    param: Option<String>,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one backward pass, per recorded variable and per parameter
/// name.
#[derive(Debug)]
pub struct Gradients {
    by_var: Vec<Option<Vec<f64>>>,
    named: BTreeMap<String, Vec<f64>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.by_var.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn named(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.named
    }

    pub fn named_mut(&mut self) -> &mut BTreeMap<String, Vec<f64>> {
        &mut self.named
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.named.get(name).map(Vec::as_slice)
    }
}

fn mismatch(what: &str, a: &Tensor, b: &Tensor) -> GraphError {
    GraphError::DimensionMismatch(format!("{what}: {:?} vs {:?}", a.shape, b.shape))
}

fn dims(t: &Tensor) -> (usize, usize) {
    (t.rows(), t.cols())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            param: None,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf without gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            param: None,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that receives a gradient and reports it under `name`.
    pub fn leaf(&mut self, name: &str, t: Tensor) -> Var {
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            param: Some(name.to_string()),
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Parameter from a store; frozen parameters (`requires_grad == false`)
    /// enter as constants.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var> {
        let t = store
            .get(name)
            .ok_or_else(|| GraphError::MissingParameter(name.to_string()))?;
        Ok(if t.requires_grad {
            self.leaf(name, t.clone())
        } else {
            self.constant(t.clone())
        })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let ((m, k), (k2, n)) = (dims(ta), dims(tb));
        if k != k2 {
            return Err(mismatch("matmul", ta, tb));
        }
        let v = Tensor::matrix(m, n, matmul(&ta.values, &tb.values, m, k, n))?;
        Ok(self.push(v, Op::MatMul(a, b), &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if dims(ta) != dims(tb) {
            return Err(mismatch("add", ta, tb));
        }
        let vals = ta
            .values
            .iter()
            .zip(&tb.values)
            .map(|(x, y)| x + y)
            .collect();
        let v = Tensor::matrix(ta.rows(), ta.cols(), vals)?;
        Ok(self.push(v, Op::Add(a, b), &[a, b]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if dims(ta) != dims(tb) {
            return Err(mismatch("mul", ta, tb));
        }
        let vals = ta
            .values
            .iter()
            .zip(&tb.values)
            .map(|(x, y)| x * y)
            .collect();
        let v = Tensor::matrix(ta.rows(), ta.cols(), vals)?;
        Ok(self.push(v, Op::Mul(a, b), &[a, b]))
    }

    /// `x + 1 b` for a `1 x c` row `b`.
    pub fn add_row_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        if tb.rows() != 1 || tb.cols() != tx.cols() {
            return Err(mismatch("bias", tx, tb));
        }
        let c = tx.cols();
        let vals = tx
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v + tb.values[i % c])
            .collect();
        let v = Tensor::matrix(tx.rows(), c, vals)?;
        Ok(self.push(v, Op::AddRowBias(x, b), &[x, b]))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let t = self.value(x);
        let v =
            Tensor::matrix(t.rows(), t.cols(), t.values.iter().map(|v| v * c).collect()).unwrap();
        self.push(v, Op::Scale(x, c), &[x])
    }

    /// Elementwise product with a constant of the same shape (dropout masks).
    pub fn mul_const(&mut self, x: Var, c: Arc<Vec<f64>>) -> Result<Var> {
        let t = self.value(x);
        if c.len() != t.values.len() {
            return Err(GraphError::DimensionMismatch(format!(
                "mask of {} for {:?}",
                c.len(),
                t.shape
            )));
        }
        let v = Tensor::matrix(
            t.rows(),
            t.cols(),
            t.values.iter().zip(c.iter()).map(|(a, b)| a * b).collect(),
        )?;
        Ok(self.push(v, Op::MulConst(x, c), &[x]))
    }

    fn map(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let t = self.value(x);
        let v =
            Tensor::matrix(t.rows(), t.cols(), t.values.iter().map(|&v| f(v)).collect()).unwrap();
        self.push(v, op, &[x])
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, Op::Relu(x), |v| v.max(0.0))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        self.map(x, Op::LeakyRelu(x, slope), move |v| {
            if v > 0.0 {
                v
            } else {
                slope * v
            }
        })
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, Op::Sigmoid(x), sigmoid)
    }

    /// `S x` for a constant sparse `S` with `rows` rows.
    pub fn spmm(&mut self, coeffs: Coeffs, rows: usize, x: Var) -> Result<Var> {
        let t = self.value(x);
        let c = t.cols();
        let mut out = vec![0.0; rows * c];
        for &(i, j, w) in coeffs.iter() {
            if i >= rows || j >= t.rows() {
                return Err(GraphError::DimensionMismatch(format!(
                    "sparse entry ({i},{j}) outside {rows}x{}",
                    t.rows()
                )));
            }
            for (o, v) in out[i * c..(i + 1) * c].iter_mut().zip(t.row(j)) {
                *o += w * v;
            }
        }
        let v = Tensor::matrix(rows, c, out)?;
        Ok(self.push(v, Op::Spmm(coeffs, x), &[x]))
    }

    pub fn concat_cols(&mut self, xs: &[Var]) -> Result<Var> {
        let rows = self.value(xs[0]).rows();
        if xs.iter().any(|&x| self.value(x).rows() != rows) {
            return Err(GraphError::DimensionMismatch(
                "concat: row counts differ".into(),
            ));
        }
        let total: usize = xs.iter().map(|&x| self.value(x).cols()).sum();
        let mut vals = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for &x in xs {
                vals.extend_from_slice(self.value(x).row(i));
            }
        }
        let v = Tensor::matrix(rows, total, vals)?;
        Ok(self.push(v, Op::ConcatCols(xs.to_vec()), xs))
    }

    pub fn select_col(&mut self, x: Var, col: usize) -> Result<Var> {
        let t = self.value(x);
        if col >= t.cols() {
            return Err(GraphError::DimensionMismatch(format!(
                "column {col} of {:?}",
                t.shape
            )));
        }
        let v = Tensor::matrix(t.rows(), 1, (0..t.rows()).map(|i| t.at(i, col)).collect())?;
        Ok(self.push(v, Op::SelectCol(x, col), &[x]))
    }

    /// Softmax of an `E x 1` column within groups: entry `k` belongs to
    /// group `segments[k]`.
    pub fn segment_softmax(&mut self, x: Var, segments: Arc<Vec<usize>>) -> Result<Var> {
        let t = self.value(x);
        if t.cols() != 1 || t.rows() != segments.len() {
            return Err(GraphError::DimensionMismatch(
                "segment softmax expects E x 1".into(),
            ));
        }
        let groups = segments.iter().max().map_or(0, |m| m + 1);
        let mut maxes = vec![f64::NEG_INFINITY; groups];
        for (k, &s) in segments.iter().enumerate() {
            maxes[s] = maxes[s].max(t.values[k]);
        }
        let exps: Vec<f64> = segments
            .iter()
            .enumerate()
            .map(|(k, &s)| (t.values[k] - maxes[s]).exp())
            .collect();
        let mut sums = vec![0.0; groups];
        for (k, &s) in segments.iter().enumerate() {
            sums[s] += exps[k];
        }
        let vals = segments
            .iter()
            .enumerate()
            .map(|(k, &s)| exps[k] / sums[s])
            .collect();
        let v = Tensor::matrix(segments.len(), 1, vals)?;
        Ok(self.push(v, Op::SegmentSoftmax(x, segments), &[x]))
    }

    /// `out[i] = sum over edges k = (i, j) of alpha[k] * x[j]`, with `rows`
    /// output rows.
    pub fn edge_aggregate(
        &mut self,
        alpha: Var,
        x: Var,
        edges: Arc<Vec<(usize, usize)>>,
        rows: usize,
    ) -> Result<Var> {
        let (ta, tx) = (self.value(alpha), self.value(x));
        if ta.cols() != 1 || ta.rows() != edges.len() {
            return Err(mismatch("edge weights", ta, tx));
        }
        let c = tx.cols();
        let mut out = vec![0.0; rows * c];
        for (k, &(i, j)) in edges.iter().enumerate() {
            if i >= rows || j >= tx.rows() {
                return Err(GraphError::DimensionMismatch(format!(
                    "edge ({i},{j}) out of range"
                )));
            }
            let a = ta.values[k];
            for (o, v) in out[i * c..(i + 1) * c].iter_mut().zip(tx.row(j)) {
                *o += a * v;
            }
        }
        let v = Tensor::matrix(rows, c, out)?;
        Ok(self.push(v, Op::EdgeAggregate(alpha, x, edges), &[alpha, x]))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let s = self.value(x).values.iter().sum();
        self.push(Tensor::scalar(s), Op::SumAll(x), &[x])
    }

    /// Weighted mean of `-log softmax(logits)[target]` over rows with a
    /// target; `weights[c]` scales class `c`.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        targets: Arc<Vec<Option<usize>>>,
        weights: Arc<Vec<f64>>,
    ) -> Result<Var> {
        let t = self.value(logits);
        let (n, c) = dims(t);
        if targets.len() != n || weights.len() != c {
            return Err(GraphError::DimensionMismatch(format!(
                "cross entropy: {n}x{c} logits, {} targets, {} weights",
                targets.len(),
                weights.len()
            )));
        }
        let probs = softmax_rows(t);
        let mut total = 0.0;
        let mut loss = 0.0;
        for (i, y) in targets.iter().enumerate() {
            if let Some(y) = *y {
                if y >= c {
                    return Err(GraphError::DimensionMismatch(format!("class {y} of {c}")));
                }
                let w = weights[y];
                total += w;
                loss -= w * log_softmax_at(t.row(i), y);
            }
        }
        if total <= 0.0 {
            return Err(GraphError::EmptyMask);
        }
        let v = Tensor::scalar(loss / total);
        Ok(self.push(
            v,
            Op::CrossEntropy {
                logits,
                targets,
                weights,
                probs,
                total_weight: total,
            },
            &[logits],
        ))
    }

    /// Mean binary cross-entropy of probabilities `p` (`n x 1`).
    pub fn bce(&mut self, p: Var, targets: Arc<Vec<f64>>) -> Result<Var> {
        let t = self.value(p);
        if t.values.len() != targets.len() || targets.is_empty() {
            return Err(GraphError::DimensionMismatch(
                "bce: targets do not match".into(),
            ));
        }
        let n = targets.len() as f64;
        let loss: f64 = t
            .values
            .iter()
            .zip(targets.iter())
            .map(|(&p, &y)| {
                let p = clamp_prob(p);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / n;
        Ok(self.push(Tensor::scalar(loss), Op::Bce(p, targets), &[p]))
    }

    pub fn mse(&mut self, x: Var, targets: Arc<Vec<f64>>) -> Result<Var> {
        let t = self.value(x);
        if t.values.len() != targets.len() || targets.is_empty() {
            return Err(GraphError::DimensionMismatch(
                "mse: targets do not match".into(),
            ));
        }
        let n = targets.len() as f64;
        let loss = t
            .values
            .iter()
            .zip(targets.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / n;
        Ok(self.push(Tensor::scalar(loss), Op::Mse(x, targets), &[x]))
    }

    /// Reverse-mode accumulation from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let root = &self.nodes[loss.0];
        if matches!(root.op, Op::Leaf) || !root.requires_grad {
            return Err(GraphError::GraphDetached);
        }
        if root.value.values.len() != 1 {
            return Err(GraphError::DimensionMismatch(format!(
                "backward needs a scalar, got {:?}",
                root.value.shape
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        let mut named = BTreeMap::new();
        for (node, g) in self.nodes.iter().zip(&grads) {
            if let (Some(name), Some(g)) = (&node.param, g) {
                let entry = named
                    .entry(name.clone())
                    .or_insert_with(|| vec![0.0; g.len()]);
                for (e, v) in entry.iter_mut().zip(g) {
                    *e += v;
                }
            }
        }
        if named.values().flatten().any(|v: &f64| !v.is_finite()) {
            return Err(GraphError::NonFinite("gradient".into()));
        }
        Ok(Gradients {
            by_var: grads,
            named,
        })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let mut acc = |v: Var, delta: Vec<f64>| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(cur) => cur.iter_mut().zip(delta).for_each(|(c, d)| *c += d),
                slot => *slot = Some(delta),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let ((m, k), n) = (dims(ta), tb.cols());
                acc(*a, matmul_nt(g, &tb.values, m, n, k));
                acc(*b, matmul_tn(&ta.values, g, m, k, n));
            }
            Op::Add(a, b) => {
                acc(*a, g.to_vec());
                acc(*b, g.to_vec());
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                acc(*a, g.iter().zip(&tb.values).map(|(g, y)| g * y).collect());
                acc(*b, g.iter().zip(&ta.values).map(|(g, x)| g * x).collect());
            }
            Op::AddRowBias(x, b) => {
                let c = val(*b).cols();
                let mut gb = vec![0.0; c];
                for (i, v) in g.iter().enumerate() {
                    gb[i % c] += v;
                }
                acc(*x, g.to_vec());
                acc(*b, gb);
            }
            Op::Scale(x, c) => acc(*x, g.iter().map(|v| v * c).collect()),
            Op::MulConst(x, m) => acc(*x, g.iter().zip(m.iter()).map(|(a, b)| a * b).collect()),
            Op::Relu(x) => acc(
                *x,
                g.iter()
                    .zip(&val(*x).values)
                    .map(|(g, &v)| if v > 0.0 { *g } else { 0.0 })
                    .collect(),
            ),
            Op::LeakyRelu(x, s) => acc(
                *x,
                g.iter()
                    .zip(&val(*x).values)
                    .map(|(g, &v)| if v > 0.0 { *g } else { s * g })
                    .collect(),
            ),
            Op::Sigmoid(x) => acc(
                *x,
                g.iter()
                    .zip(&node.value.values)
                    .map(|(g, &y)| g * y * (1.0 - y))
                    .collect(),
            ),
            Op::Spmm(coeffs, x) => {
                let tx = val(*x);
                let c = tx.cols();
                let mut gx = vec![0.0; tx.values.len()];
                for &(i, j, w) in coeffs.iter() {
                    for (o, v) in gx[j * c..(j + 1) * c]
                        .iter_mut()
                        .zip(&g[i * c..(i + 1) * c])
                    {
                        *o += w * v;
                    }
                }
                acc(*x, gx);
            }
            Op::ConcatCols(xs) => {
                let total = node.value.cols();
                let mut off = 0;
                for &x in xs {
                    let tx = val(x);
                    let c = tx.cols();
                    let mut gx = Vec::with_capacity(tx.values.len());
                    for i in 0..tx.rows() {
                        gx.extend_from_slice(&g[i * total + off..i * total + off + c]);
                    }
                    acc(x, gx);
                    off += c;
                }
            }
            Op::SelectCol(x, col) => {
                let tx = val(*x);
                let c = tx.cols();
                let mut gx = vec![0.0; tx.values.len()];
                for (i, v) in g.iter().enumerate() {
                    gx[i * c + col] = *v;
                }
                acc(*x, gx);
            }
            Op::SegmentSoftmax(x, segments) => {
                let y = &node.value.values;
                let groups = segments.iter().max().map_or(0, |m| m + 1);
                let mut dot = vec![0.0; groups];
                for (k, &s) in segments.iter().enumerate() {
                    dot[s] += y[k] * g[k];
                }
                acc(
                    *x,
                    segments
                        .iter()
                        .enumerate()
                        .map(|(k, &s)| y[k] * (g[k] - dot[s]))
                        .collect(),
                );
            }
            Op::EdgeAggregate(alpha, x, edges) => {
                let (ta, tx) = (val(*alpha), val(*x));
                let c = tx.cols();
                let mut ga = vec![0.0; ta.values.len()];
                let mut gx = vec![0.0; tx.values.len()];
                for (k, &(i, j)) in edges.iter().enumerate() {
                    let gi = &g[i * c..(i + 1) * c];
                    ga[k] = gi.iter().zip(tx.row(j)).map(|(a, b)| a * b).sum();
                    for (o, v) in gx[j * c..(j + 1) * c].iter_mut().zip(gi) {
                        *o += ta.values[k] * v;
                    }
                }
                acc(*alpha, ga);
                acc(*x, gx);
            }
            Op::SumAll(x) => acc(*x, vec![g[0]; val(*x).values.len()]),
            Op::CrossEntropy {
                logits,
                targets,
                weights,
                probs,
                total_weight,
            } => {
                let c = val(*logits).cols();
                let mut gl = vec![0.0; probs.len()];
                for (i, y) in targets.iter().enumerate() {
                    if let Some(y) = *y {
                        let s = g[0] * weights[y] / total_weight;
                        for j in 0..c {
                            let onehot = if j == y { 1.0 } else { 0.0 };
                            gl[i * c + j] = s * (probs[i * c + j] - onehot);
                        }
                    }
                }
                acc(*logits, gl);
            }
            Op::Bce(p, targets) => {
                let n = targets.len() as f64;
                acc(
                    *p,
                    val(*p)
                        .values
                        .iter()
                        .zip(targets.iter())
                        .map(|(&p, &y)| {
                            let p = clamp_prob(p);
                            g[0] * (p - y) / (p * (1.0 - p)) / n
                        })
                        .collect(),
                );
            }
            Op::Mse(x, targets) => {
                let n = targets.len() as f64;
                acc(
                    *x,
                    val(*x)
                        .values
                        .iter()
                        .zip(targets.iter())
                        .map(|(a, b)| g[0] * 2.0 * (a - b) / n)
                        .collect(),
                );
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(1e-12, 1.0 - 1e-12)
}

fn log_softmax_at(row: &[f64], y: usize) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    row[y] - lse
}

/// Row-wise softmax.
pub fn softmax_rows(t: &Tensor) -> Vec<f64> {
    let c = t.cols();
    let mut out = Vec::with_capacity(t.values.len());
    for i in 0..t.rows() {
        let row = t.row(i);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = exps.iter().sum();
        out.extend(exps.iter().map(|e| e / s));
    }
    debug_assert_eq!(out.len(), t.rows() * c);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_derivative() {
        let mut t = Tape::new();
        let x = t.leaf("x", Tensor::scalar(3.0));
        let y = t.mul(x, x).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g.wrt(x).unwrap(), [6.0]);
        assert_eq!(g.get("x").unwrap(), [6.0]);
    }

    #[test]
    fn product_derivative() {
        let mut t = Tape::new();
        let x = t.leaf("x", Tensor::scalar(2.0));
        let y = t.leaf("y", Tensor::scalar(5.0));
        let z = t.mul(x, y).unwrap();
        let g = t.backward(z).unwrap();
        assert_eq!((g.get("x").unwrap()[0], g.get("y").unwrap()[0]), (5.0, 2.0));
    }

    #[test]
    fn detached_loss_is_rejected() {
        let mut t = Tape::new();
        let c = t.constant(Tensor::scalar(1.0));
        assert!(matches!(t.backward(c), Err(GraphError::GraphDetached)));
        let d = t.scale(c, 2.0);
        assert!(matches!(t.backward(d), Err(GraphError::GraphDetached)));
    }

    #[test]
    fn cross_entropy_values() {
        let mut t = Tape::new();
        let l = t.leaf("l", Tensor::zeros(3, 2));
        let w = Arc::new(vec![1.0, 1.0]);
        let ce = t
            .cross_entropy(l, Arc::new(vec![Some(0), None, Some(1)]), w.clone())
            .unwrap();
        assert!((t.value(ce).item() - 2f64.ln()).abs() < 1e-12);
        let big = t.constant(Tensor::matrix(1, 2, vec![500.0, -500.0]).unwrap());
        let ce = t
            .cross_entropy(big, Arc::new(vec![Some(0)]), w.clone())
            .unwrap();
        assert!(t.value(ce).item() < 1e-12);
        assert!(matches!(
            t.cross_entropy(l, Arc::new(vec![None, None, None]), w),
            Err(GraphError::EmptyMask)
        ));
    }

    #[test]
    fn bce_and_mse_values() {
        let mut t = Tape::new();
        let p = t.constant(Tensor::matrix(2, 1, vec![0.5, 0.5]).unwrap());
        let b = t.bce(p, Arc::new(vec![0.0, 1.0])).unwrap();
        assert!((t.value(b).item() - 2f64.ln()).abs() < 1e-12);
        let exact = t.constant(Tensor::matrix(2, 1, vec![0.0, 1.0]).unwrap());
        let b = t.bce(exact, Arc::new(vec![0.0, 1.0])).unwrap();
        assert!(t.value(b).item() < 1e-11);
        let m = t.mse(exact, Arc::new(vec![0.0, 1.0])).unwrap();
        assert_eq!(t.value(m).item(), 0.0);
    }
}
