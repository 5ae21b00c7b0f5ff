use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::train::TrainConfig;
use super::ParamStore;

/// First and second moment estimates per parameter, plus the step count.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub t: u64,
    pub m: BTreeMap<String, Vec<f64>>,
    pub v: BTreeMap<String, Vec<f64>>,
}

/// One bias-corrected Adam update. L2 weight decay is added to the gradient.
/// Only trainable parameters that have a gradient are touched.
pub fn adam_step(
    params: &mut ParamStore,
    grads: &BTreeMap<String, Vec<f64>>,
    state: &mut AdamState,
    config: &TrainConfig,
) {
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (name, g) in grads {
        let Some(p) = params.get_mut(name) else {
            continue;
        };
        if !p.requires_grad {
            continue;
        }
        let m = state
            .m
            .entry(name.clone())
            .or_insert_with(|| vec![0.0; g.len()]);
        let v = state
            .v
            .entry(name.clone())
            .or_insert_with(|| vec![0.0; g.len()]);
        for i in 0..g.len() {
            let gi = g[i] + config.weight_decay * p.values[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            p.values[i] -= config.lr * mhat / (vhat.sqrt() + config.eps);
        }
    }
}
