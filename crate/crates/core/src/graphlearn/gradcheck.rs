//! Central finite-difference gradient checks.

use super::tape::{Tape, Var};
use super::{ParamStore, Result};

/// Gradients below this magnitude are compared on an absolute scale, since
/// their finite-difference estimate is dominated by rounding noise.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares the tape gradient of `loss` against central differences with
/// step `eps` for every coordinate of every trainable parameter.
pub fn check_gradients<F>(params: &ParamStore, eps: f64, loss: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let mut tape = Tape::new();
    let l = loss(&mut tape, params)?;
    let grads = tape.backward(l)?;
    let eval = |p: &ParamStore| -> Result<f64> {
        let mut t = Tape::new();
        let v = loss(&mut t, p)?;
        Ok(t.value(v).item())
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst: None,
        checked: 0,
    };
    let mut work = params.clone();
    for (name, t) in params {
        if !t.requires_grad {
            continue;
        }
        let analytic = grads
            .get(name)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; t.values.len()]);
        for i in 0..t.values.len() {
            let x = t.values[i];
            work.get_mut(name).unwrap().values[i] = x + eps;
            let up = eval(&work)?;
            work.get_mut(name).unwrap().values[i] = x - eps;
            let down = eval(&work)?;
            work.get_mut(name).unwrap().values[i] = x;
            let numeric = (up - down) / (2.0 * eps);
            let rel = relative_error(analytic[i], numeric);
            report.max_abs_error = report.max_abs_error.max((analytic[i] - numeric).abs());
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst = Some((name.clone(), i));
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
