//! Finite-difference gradient suite over every differentiable operation.

use std::sync::Arc;

use mcr_graph::astgraph::parse_source;
use mcr_graph::graphlearn::gradcheck::{check_gradients, GradCheckReport};
use mcr_graph::graphlearn::{
    gat_apply, gcn_apply, gcn_normalize, graph_forward, quality_forward, Activation,
    AttentionIndex, GraphInputs, LayerType, Model, ModelConfig, ParamStore, QualityInput, Tape,
    Tensor, Var,
};
use mcr_graph::textrep::Vocabulary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-5;

fn rand_tensor(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn param(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    rand_tensor(rng, r, c).trainable()
}

/// Random undirected graph with self-loops as a weighted edge list.
pub fn random_adjacency(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize, f64)> {
    let mut adj = Vec::new();
    for i in 0..n {
        adj.push((i, i, 1.0));
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                adj.push((i, j, 1.0));
                adj.push((j, i, 1.0));
            }
        }
    }
    adj.sort_by_key(|a| (a.0, a.1));
    adj
}

/// Linear probe `sum(out * R)` with a fixed random `R`, so every output
/// coordinate contributes to the gradient.
fn probe(tape: &mut Tape, out: Var, r: &Tensor) -> Var {
    let rc = tape.constant(r.clone());
    let m = tape.mul(out, rc).unwrap();
    tape.sum_all(m)
}

fn run(
    name: &str,
    params: &ParamStore,
    f: impl Fn(&mut Tape, &ParamStore) -> mcr_graph::graphlearn::Result<Var>,
) -> (String, GradCheckReport) {
    let report = check_gradients(params, EPS, f).unwrap_or_else(|e| panic!("{name}: {e}"));
    assert!(report.checked > 0, "{name}: nothing checked");
    (name.to_string(), report)
}

/// Every check for one seed; dimensions are drawn in `1..=8`.
pub fn gradient_suite(seed: u64) -> Vec<(String, GradCheckReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let n = rng.gen_range(2..=8);
    let fin = rng.gen_range(1..=8);
    let fout = rng.gen_range(1..=8);

    // GCN layer, gradients w.r.t. features, weights and bias.
    {
        let adj = Arc::new(gcn_normalize(n, &random_adjacency(&mut rng, n)));
        let mut p = ParamStore::new();
        p.insert("h".into(), param(&mut rng, n, fin));
        p.insert("w".into(), param(&mut rng, fin, fout));
        p.insert("b".into(), param(&mut rng, 1, fout));
        let r = rand_tensor(&mut rng, n, fout);
        out.push(run("gcn", &p, |t, p| {
            let h = t.param(p, "h")?;
            let w = t.param(p, "w")?;
            let b = t.param(p, "b")?;
            let o = gcn_apply(t, h, &adj, n, w, b, Activation::Relu)?;
            Ok(probe(t, o, &r))
        }));
    }

    // GAT layer, one or two heads.
    {
        let heads = rng.gen_range(1..=2);
        let hd = rng.gen_range(1..=4);
        let edges = random_adjacency(&mut rng, n)
            .into_iter()
            .map(|(i, j, _)| (i, j))
            .collect();
        let index = AttentionIndex::new(n, edges);
        let mut p = ParamStore::new();
        p.insert("h".into(), param(&mut rng, n, fin));
        for k in 0..heads {
            p.insert(format!("w{k}"), param(&mut rng, fin, hd));
            p.insert(format!("a{k}"), param(&mut rng, 2 * hd, 1));
        }
        let r = rand_tensor(&mut rng, n, heads * hd);
        out.push(run("gat", &p, |t, p| {
            let h = t.param(p, "h")?;
            let mut hs = Vec::new();
            for k in 0..heads {
                hs.push((t.param(p, &format!("w{k}"))?, t.param(p, &format!("a{k}"))?));
            }
            let o = gat_apply(t, h, &index, &hs, 0.2, Activation::Identity)?;
            Ok(probe(t, o, &r))
        }));
    }

    // Embedding lookup with mean pooling.
    {
        let rows = rng.gen_range(3..=8);
        let d = rng.gen_range(1..=8);
        let docs = rng.gen_range(1..=4);
        let mut coeffs = Vec::new();
        for r in 0..docs {
            let len = rng.gen_range(1..=5);
            for _ in 0..len {
                coeffs.push((r, rng.gen_range(1..rows), 1.0 / len as f64));
            }
        }
        let coeffs = Arc::new(coeffs);
        let mut p = ParamStore::new();
        p.insert("table".into(), param(&mut rng, rows, d));
        let r = rand_tensor(&mut rng, docs, d);
        out.push(run("embedding", &p, |t, p| {
            let tab = t.param(p, "table")?;
            let o = t.spmm(coeffs.clone(), docs, tab)?;
            Ok(probe(t, o, &r))
        }));
    }

    // Classifier head with weighted, masked cross-entropy.
    {
        let k = if rng.gen_bool(0.5) { 2 } else { 5 };
        let mut targets: Vec<Option<usize>> = (0..n)
            .map(|_| rng.gen_bool(0.7).then(|| rng.gen_range(0..k)))
            .collect();
        targets[0] = Some(0);
        let targets = Arc::new(targets);
        let weights = Arc::new(
            (0..k)
                .map(|_| rng.gen_range(0.5..3.0))
                .collect::<Vec<f64>>(),
        );
        let mut p = ParamStore::new();
        p.insert("x".into(), param(&mut rng, n, fin));
        p.insert("w".into(), param(&mut rng, fin, k));
        p.insert("b".into(), param(&mut rng, 1, k));
        out.push(run("cross_entropy_head", &p, |t, p| {
            let x = t.param(p, "x")?;
            let w = t.param(p, "w")?;
            let b = t.param(p, "b")?;
            let z = t.matmul(x, w)?;
            let z = t.add_row_bias(z, b)?;
            t.cross_entropy(z, targets.clone(), weights.clone())
        }));
    }

    // Sigmoid head with BCE on one column and MSE on the other.
    {
        let mut p = ParamStore::new();
        p.insert("x".into(), param(&mut rng, n, fin));
        p.insert("w".into(), param(&mut rng, fin, 2));
        p.insert("b".into(), param(&mut rng, 1, 2));
        let y = Arc::new(
            (0..n)
                .map(|_| f64::from(rng.gen_range(0..2u8)))
                .collect::<Vec<_>>(),
        );
        let c = Arc::new(
            (0..n)
                .map(|_| rng.gen_range(0.0..1.0))
                .collect::<Vec<f64>>(),
        );
        out.push(run("bce_mse_head", &p, |t, p| {
            let x = t.param(p, "x")?;
            let w = t.param(p, "w")?;
            let b = t.param(p, "b")?;
            let z = t.matmul(x, w)?;
            let z = t.add_row_bias(z, b)?;
            let s = t.sigmoid(z);
            let c0 = t.select_col(s, 0)?;
            let c1 = t.select_col(s, 1)?;
            let l1 = t.bce(c0, y.clone())?;
            let l2 = t.mse(c1, c.clone())?;
            t.add(l1, l2)
        }));
    }

    // Full graph models (token embedding, layers, head) on a parsed graph.
    let graph = parse_source(
        "class A { int f(int x) { if (x > 1) { return g(x, 2); } while (x < 9) { x = x + 1; } return x; } }",
    )
    .unwrap();
    for layer in [LayerType::Gcn, LayerType::Gat] {
        let heads = 2;
        let h = 2 * rng.gen_range(1..=4);
        let cfg = ModelConfig {
            layer,
            hidden_dims: vec![h],
            heads,
            token_dim: rng.gen_range(1..=4),
            token_table_size: 8,
            dropout: 0.0,
            ..ModelConfig::default()
        };
        let model = Model::init(&cfg, seed).unwrap();
        let inputs = GraphInputs::new(&graph, &cfg);
        let targets = Arc::new(
            (0..graph.nodes.len())
                .map(|i| (i % 3 != 0).then_some(i % 2))
                .collect::<Vec<_>>(),
        );
        let weights = Arc::new(vec![1.0, 2.5]);
        let name = format!("{layer:?}_model").to_lowercase();
        out.push(run(&name, &model.params, |t, p| {
            let m = Model {
                config: cfg.clone(),
                params: p.clone(),
                vocabulary: Vocabulary::default(),
            };
            let (_, logits) = graph_forward(t, &m, "", &inputs, None)?;
            t.cross_entropy(logits, targets.clone(), weights.clone())
        }));
    }

    // QUALITY head with the comment embedding table.
    {
        let enc_cfg = ModelConfig {
            hidden_dims: vec![3],
            token_dim: 2,
            token_table_size: 4,
            ..ModelConfig::default()
        };
        let enc = Model::init(&enc_cfg, seed).unwrap();
        let vocab =
            mcr_graph::textrep::build_vocabulary(&[vec!["a", "b", "c"], vec!["a", "b"]], 1, 10);
        let cfg = ModelConfig {
            comment_dim: rng.gen_range(1..=4),
            ..ModelConfig::default()
        };
        let model = Model::init_quality(&cfg, &enc, vocab, seed).unwrap();
        let batch: Vec<QualityInput> = (0..3)
            .map(|_| QualityInput {
                token_ids: (0..rng.gen_range(0..4))
                    .map(|_| rng.gen_range(1..5))
                    .collect(),
                node_embedding: (0..3).map(|_| rng.gen_range(0.0..1.0)).collect(),
            })
            .collect();
        let act = Arc::new(vec![1.0, 0.0, 1.0]);
        let clar = Arc::new(vec![0.5, 1.0, 1.0 / 3.0]);
        out.push(run("quality_head", &model.params, |t, p| {
            let m = Model {
                config: model.config.clone(),
                params: p.clone(),
                vocabulary: model.vocabulary.clone(),
            };
            let o = quality_forward(t, &m, &batch)?;
            let c0 = t.select_col(o, 0)?;
            let c1 = t.select_col(o, 1)?;
            let l1 = t.bce(c0, act.clone())?;
            let l2 = t.mse(c1, clar.clone())?;
            t.add(l1, l2)
        }));
    }
    out
}
