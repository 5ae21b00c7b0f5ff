use serde::{Deserialize, Serialize};

use super::{EvalError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
}

/// Metrics of one task. Classification fields are filled for LIKELIHOOD and
/// TOPIC, regression fields for the clarity part of QUALITY.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_class: Vec<ClassMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_f1: Option<f64>,
    /// Binary tasks only; absent when the labels hold a single class.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roc_auc: Option<f64>,
    /// `confusion[gold][predicted]`
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub confusion: Vec<Vec<usize>>,
    #[serde(default)]
    pub support: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regression: Option<RegressionMetrics>,
    /// Other named values (e.g. BCE of actionability).
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub extra: std::collections::BTreeMap<String, f64>,
    /// Resolved run configuration, filled in by the command-line driver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Confusion-matrix metrics for predicted vs. gold classes in `0..classes`.
/// Empty classes get precision/recall/F1 of 0 and count toward the macro
/// average.
pub fn classification_report(
    predicted: &[usize],
    gold: &[usize],
    classes: usize,
) -> Result<MetricsReport> {
    if predicted.len() != gold.len() {
        return Err(EvalError::Misaligned(predicted.len(), gold.len()));
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &g) in predicted.iter().zip(gold) {
        if p >= classes || g >= classes {
            return Err(EvalError::InvalidLabel(p.max(g)));
        }
        confusion[g][p] += 1;
    }
    let mut per_class = Vec::with_capacity(classes);
    for c in 0..classes {
        let tp = confusion[c][c];
        let predicted_c: usize = (0..classes).map(|g| confusion[g][c]).sum();
        let support: usize = confusion[c].iter().sum();
        let precision = ratio(tp, predicted_c);
        let recall = ratio(tp, support);
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support,
        });
    }
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let k = classes as f64;
    Ok(MetricsReport {
        accuracy: Some(ratio(correct, gold.len())),
        macro_precision: Some(per_class.iter().map(|m| m.precision).sum::<f64>() / k),
        macro_recall: Some(per_class.iter().map(|m| m.recall).sum::<f64>() / k),
        macro_f1: Some(per_class.iter().map(|m| m.f1).sum::<f64>() / k),
        per_class,
        confusion,
        support: gold.len(),
        ..MetricsReport::default()
    })
}

/// ROC-AUC as the fraction of (positive, negative) pairs ranked correctly,
/// ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(EvalError::Misaligned(scores.len(), labels.len()));
    }
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    if pairs.iter().any(|(s, _)| s.is_nan()) {
        return Err(EvalError::NonFinite);
    }
    let n_pos = pairs.iter().filter(|p| p.1).count();
    let n_neg = pairs.len() - n_pos;
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClassAuc);
    }
    // Sort by score and count, for every positive, the negatives strictly
    // below it plus half of those tied with it.
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut concordant = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        let pos = pairs[i..j].iter().filter(|p| p.1).count();
        let neg = (j - i) - pos;
        concordant += pos as f64 * (neg_below as f64 + 0.5 * neg as f64);
        neg_below += neg;
        i = j;
    }
    Ok(concordant / (n_pos as f64 * n_neg as f64))
}

/// Binary metrics at `threshold` (score >= threshold predicts positive) plus
/// ROC-AUC. AUC is left out when only one class is present.
pub fn evaluate_classification(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<MetricsReport> {
    if scores.len() != labels.len() {
        return Err(EvalError::Misaligned(scores.len(), labels.len()));
    }
    let predicted: Vec<usize> = scores
        .iter()
        .map(|&s| usize::from(s >= threshold))
        .collect();
    let gold: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
    let mut report = classification_report(&predicted, &gold, 2)?;
    report.roc_auc = match roc_auc(scores, labels) {
        Ok(a) => Some(a),
        Err(EvalError::SingleClassAuc) => None,
        Err(e) => return Err(e),
    };
    Ok(report)
}

pub fn evaluate_regression(preds: &[f64], targets: &[f64]) -> Result<RegressionMetrics> {
    if preds.len() != targets.len() {
        return Err(EvalError::Misaligned(preds.len(), targets.len()));
    }
    if preds.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = preds.len() as f64;
    let mae = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n;
    let mse = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / n;
    Ok(RegressionMetrics {
        mae,
        rmse: mse.sqrt(),
        n: preds.len(),
    })
}
