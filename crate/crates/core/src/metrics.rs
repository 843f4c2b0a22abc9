//! Ranking and prediction metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision-recall and ROC curves of a score ranking against a known
/// support set.
///
/// `thresholds` holds the distinct score values in descending order; a
/// point counts everything scoring at least the threshold as selected,
/// so tied scores enter together. The point arrays carry one leading
/// anchor entry (recall 0, precision 1, false-positive rate 0) so the
/// curves start at the conventional corner: `precision[i + 1]`,
/// `recall[i + 1]` and `fpr[i + 1]` belong to `thresholds[i]`. Both
/// areas are trapezoidal, `auc_pr` over recall and `auc_roc` over the
/// false-positive rate, which makes a perfect ranking score exactly 1
/// and a fully inverted one 0 in `auc_roc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub fpr: Vec<f64>,
    pub auc_pr: f64,
    pub auc_roc: f64,
}

/// Scores every feature and compares the induced ranking with the true
/// support. Errors when the support is empty or covers everything,
/// since neither leaves both curves defined.
pub fn pr_and_roc(scores: &[f64], support: &[usize]) -> Result<PrCurve> {
    let p = scores.len();
    if p == 0 {
        return Err(Error::invalid("no scores"));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("score".into()));
    }
    let mut is_true = vec![false; p];
    for &j in support {
        if j >= p {
            return Err(Error::invalid(format!("support index {j} out of range for {p} scores")));
        }
        if is_true[j] {
            return Err(Error::invalid(format!("support index {j} repeated")));
        }
        is_true[j] = true;
    }
    let k = support.len();
    if k == 0 || k == p {
        return Err(Error::invalid(format!(
            "support must be a proper nonempty subset, got {k} of {p}"
        )));
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = Vec::new();
    let mut precision = vec![1.0];
    let mut recall = vec![0.0];
    let mut fpr = vec![0.0];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < p {
        let t = scores[order[i]];
        while i < p && scores[order[i]] == t {
            if is_true[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(t);
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / k as f64);
        fpr.push(fp as f64 / (p - k) as f64);
    }

    let trapezoid = |xs: &[f64], ys: &[f64]| {
        xs.windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum::<f64>()
    };
    let auc_pr = trapezoid(&recall, &precision);
    let auc_roc = trapezoid(&fpr, &recall);
    Ok(PrCurve { thresholds, precision, recall, fpr, auc_pr, auc_roc })
}

/// `1 - Var(y - prediction) / Var(y)`, with population variances.
/// A constant target leaves the ratio undefined and is rejected.
pub fn explained_variance(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape(format!(
            "{} targets but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("empty target"));
    }
    if !y_true.iter().chain(y_pred.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("target or prediction".into()));
    }
    let n = y_true.len() as f64;
    let var = |xs: &mut dyn Iterator<Item = f64>| {
        let vals: Vec<f64> = xs.collect();
        let mean = vals.iter().sum::<f64>() / n;
        vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    };
    let var_y = var(&mut y_true.iter().copied());
    if var_y == 0.0 {
        return Err(Error::invalid("constant target has no variance to explain"));
    }
    let var_resid = var(&mut y_true.iter().zip(y_pred.iter()).map(|(t, p)| t - p));
    Ok(1.0 - var_resid / var_y)
}

/// Fraction of matching labels between two -1/+1 vectors.
pub fn accuracy(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape(format!(
            "{} targets but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("empty target"));
    }
    if !y_true
        .iter()
        .chain(y_pred.iter())
        .all(|&v| v == 1.0 || v == -1.0)
    {
        return Err(Error::invalid("labels must be -1 or +1"));
    }
    let hits = y_true
        .iter()
        .zip(y_pred.iter())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / y_true.len() as f64)
}
