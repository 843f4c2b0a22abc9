//! Core data model: design matrices, targets, coefficients, scores.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Partition;

/// What the target values mean, and which loss applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// Real-valued target, squared loss.
    Regression,
    /// Labels in {-1, +1}, logistic loss.
    Classification,
}

/// An `n x p` matrix of finite values, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: Array2<f64>,
}

impl DesignMatrix {
    /// Requires at least two rows, at least one column, all entries finite.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::invalid(format!(
                "design matrix needs at least 2 rows, got {}",
                values.nrows()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::invalid("design matrix needs at least 1 column"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("design matrix entry".into()));
        }
        Ok(DesignMatrix { values })
    }

    pub(crate) fn new_unchecked(values: Array2<f64>) -> Self {
        debug_assert!(values.nrows() >= 2 && values.ncols() >= 1);
        DesignMatrix { values }
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }
}

/// A target vector tagged with its task.
///
/// Classification targets must use the labels -1 and +1 and contain both.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetVector {
    values: Array1<f64>,
    task: Task,
}

impl TargetVector {
    pub fn new(values: Array1<f64>, task: Task) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("target vector is empty"));
        }
        match task {
            Task::Regression => {
                if !values.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite("regression target".into()));
                }
            }
            Task::Classification => {
                if !values.iter().all(|&v| v == 1.0 || v == -1.0) {
                    return Err(Error::invalid(
                        "classification target must contain only -1 and +1",
                    ));
                }
                let pos = values.iter().filter(|&&v| v == 1.0).count();
                if pos == 0 || pos == values.len() {
                    return Err(Error::invalid(
                        "classification target must contain both classes",
                    ));
                }
            }
        }
        Ok(TargetVector { values, task })
    }

    pub(crate) fn new_unchecked(values: Array1<f64>, task: Task) -> Self {
        TargetVector { values, task }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }
}

/// Fitted coefficients plus intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefVector {
    values: Array1<f64>,
    intercept: f64,
}

impl CoefVector {
    pub fn new(values: Array1<f64>, intercept: f64) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) || !intercept.is_finite() {
            return Err(Error::NonFinite("coefficient".into()));
        }
        Ok(CoefVector { values, intercept })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Indices with exactly nonzero coefficients, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }
}

/// Per-feature selection frequencies out of a fixed number of repetitions.
///
/// Every score is `count / repetitions` for an integer count, so scores
/// lie in `[0, 1]` on a grid of step `1 / repetitions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityScores {
    scores: Array1<f64>,
    repetitions: usize,
}

impl StabilityScores {
    pub fn from_counts(counts: &[u32], repetitions: usize) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::invalid("repetitions must be positive"));
        }
        if counts.is_empty() {
            return Err(Error::invalid("no features"));
        }
        if let Some(&c) = counts.iter().find(|&&c| c as usize > repetitions) {
            return Err(Error::invalid(format!(
                "count {c} exceeds {repetitions} repetitions"
            )));
        }
        let scores = counts.iter().map(|&c| c as f64 / repetitions as f64).collect();
        Ok(StabilityScores { scores, repetitions })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn scores(&self) -> &Array1<f64> {
        &self.scores
    }

    /// Features with score strictly above `threshold`, ascending.
    pub fn selected(&self, threshold: f64) -> Vec<usize> {
        self.scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > threshold)
            .map(|(j, _)| j)
            .collect()
    }
}

/// The weights a synthetic dataset was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    weights: Vec<f64>,
    support: Vec<usize>,
    patch_height: usize,
    patch_width: usize,
    patch_origins: Vec<(usize, usize)>,
}

impl GroundTruth {
    pub fn new(
        weights: Vec<f64>,
        patch_height: usize,
        patch_width: usize,
        patch_origins: Vec<(usize, usize)>,
    ) -> Self {
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(j, _)| j)
            .collect();
        GroundTruth { weights, support, patch_height, patch_width, patch_origins }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nonzero positions, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn patch_height(&self) -> usize {
        self.patch_height
    }

    pub fn patch_width(&self) -> usize {
        self.patch_width
    }

    pub fn patch_origins(&self) -> &[(usize, usize)] {
        &self.patch_origins
    }
}

/// Column means and divisors recorded by [`standardize_columns`], for
/// applying the same affine map to held-out rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Array1<f64>,
    pub scales: Array1<f64>,
    /// Columns that had zero variance; they were mapped to zeros and
    /// their recorded scale is 1.
    pub constant_columns: Vec<usize>,
}

impl Standardization {
    /// Maps new rows through `(x - mean) / scale` column by column.
    pub fn apply(&self, x: &DesignMatrix) -> Result<DesignMatrix> {
        if x.n_features() != self.means.len() {
            return Err(Error::shape(format!(
                "matrix has {} columns, standardization has {}",
                x.n_features(),
                self.means.len()
            )));
        }
        let mut out = x.values().clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let m = self.means[j];
            let s = self.scales[j];
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(DesignMatrix::new_unchecked(out))
    }
}

/// Centers each column and divides by its population standard deviation.
///
/// Zero-variance columns become all zeros; they are listed in
/// `constant_columns` so callers can warn about them.
pub fn standardize_columns(x: &DesignMatrix) -> (DesignMatrix, Standardization) {
    let n = x.n_samples();
    let p = x.n_features();
    let mut out = x.values().clone();
    let mut means = Array1::zeros(p);
    let mut scales = Array1::ones(p);
    let mut constant_columns = Vec::new();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in col.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let mean = sum / n as f64;
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let scale = var.sqrt();
        means[j] = mean;
        if lo == hi || scale == 0.0 {
            constant_columns.push(j);
            col.fill(0.0);
        } else {
            scales[j] = scale;
            col.mapv_inplace(|v| (v - mean) / scale);
        }
    }
    (
        DesignMatrix::new_unchecked(out),
        Standardization { means, scales, constant_columns },
    )
}

/// Replaces each cluster's columns by their mean column.
///
/// The output has one column per cluster, ordered by cluster label.
pub fn reduce_by_partition(x: &DesignMatrix, partition: &Partition) -> Result<DesignMatrix> {
    if partition.feature_count() != x.n_features() {
        return Err(Error::shape(format!(
            "partition covers {} features but matrix has {}",
            partition.feature_count(),
            x.n_features()
        )));
    }
    let n = x.n_samples();
    let q = partition.cluster_count();
    let mut out = Array2::zeros((n, q));
    let values = x.values();
    for (j, &label) in partition.labels().iter().enumerate() {
        let col = values.column(j);
        let mut dst = out.column_mut(label);
        dst += &col;
    }
    for (c, mut col) in out.columns_mut().into_iter().enumerate() {
        let size = partition.sizes()[c] as f64;
        col.mapv_inplace(|v| v / size);
    }
    Ok(DesignMatrix::new_unchecked(out))
}

/// Expands cluster-level coefficients back to feature space: every
/// feature receives its cluster's coefficient.
pub fn backproject(coef: &CoefVector, partition: &Partition) -> Result<CoefVector> {
    if coef.len() != partition.cluster_count() {
        return Err(Error::shape(format!(
            "coefficients cover {} clusters but partition has {}",
            coef.len(),
            partition.cluster_count()
        )));
    }
    let values = partition.labels().iter().map(|&l| coef.values()[l]).collect();
    Ok(CoefVector { values, intercept: coef.intercept() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    #[test]
    fn design_matrix_rejects_bad_shapes_and_values() {
        assert!(DesignMatrix::new(arr2(&[[1.0, 2.0]])).is_err());
        assert!(DesignMatrix::new(Array2::zeros((3, 0))).is_err());
        assert!(DesignMatrix::new(arr2(&[[1.0], [f64::NAN]])).is_err());
        assert!(DesignMatrix::new(arr2(&[[1.0], [2.0]])).is_ok());
    }

    #[test]
    fn classification_target_needs_both_labels() {
        let t = TargetVector::new(arr1(&[1.0, -1.0, 1.0]), Task::Classification);
        assert!(t.is_ok());
        assert!(TargetVector::new(arr1(&[1.0, 1.0]), Task::Classification).is_err());
        assert!(TargetVector::new(arr1(&[1.0, 0.5]), Task::Classification).is_err());
    }

    #[test]
    fn coef_support_is_exact_nonzero() {
        let c = CoefVector::new(arr1(&[0.0, -2.0, 1e-300, 0.0]), 0.5).unwrap();
        assert_eq!(c.support(), vec![1, 2]);
        assert_eq!(c.nnz(), 2);
    }

    #[test]
    fn stability_scores_lie_on_grid() {
        let s = StabilityScores::from_counts(&[0, 3, 10], 10).unwrap();
        assert_eq!(s.scores()[1], 0.3);
        assert_eq!(s.selected(0.25), vec![1, 2]);
        assert_eq!(s.selected(0.3), vec![2]);
        assert!(StabilityScores::from_counts(&[11], 10).is_err());
    }

    #[test]
    fn standardize_matches_hand_example() {
        let x = DesignMatrix::new(arr2(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])).unwrap();
        let (z, info) = standardize_columns(&x);
        let c = z.values().column(0);
        assert_abs_diff_eq!(c[0], -1.224744871391589, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[2], 1.224744871391589, epsilon = 1e-12);
        assert_eq!(info.constant_columns, vec![1]);
        assert!(z.values().column(1).iter().all(|&v| v == 0.0));
        assert_eq!(info.scales[1], 1.0);
        assert_abs_diff_eq!(info.means[0], 2.0);
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance() {
        let x = DesignMatrix::new(arr2(&[
            [0.3, -1.0],
            [2.5, 4.0],
            [-1.1, 0.5],
            [0.9, 2.2],
        ]))
        .unwrap();
        let (z, _) = standardize_columns(&x);
        for col in z.values().columns() {
            let mean = col.sum() / 4.0;
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn apply_reuses_training_statistics() {
        let x = DesignMatrix::new(arr2(&[[1.0], [3.0]])).unwrap();
        let (_, info) = standardize_columns(&x);
        let fresh = DesignMatrix::new(arr2(&[[2.0], [4.0]])).unwrap();
        let mapped = info.apply(&fresh).unwrap();
        assert_abs_diff_eq!(mapped.values()[[0, 0]], 0.0);
        assert_abs_diff_eq!(mapped.values()[[1, 0]], 2.0);
    }

    #[test]
    fn reduce_averages_cluster_columns() {
        let x = DesignMatrix::new(arr2(&[[1.0, 3.0, 10.0], [2.0, 4.0, 20.0]])).unwrap();
        let part = Partition::new(vec![0, 0, 1], 2).unwrap();
        let red = reduce_by_partition(&x, &part).unwrap();
        assert_eq!(red.n_features(), 2);
        assert_abs_diff_eq!(red.values()[[0, 0]], 2.0);
        assert_abs_diff_eq!(red.values()[[1, 0]], 3.0);
        assert_abs_diff_eq!(red.values()[[0, 1]], 10.0);
    }

    #[test]
    fn reduce_with_singletons_is_identity() {
        let x = DesignMatrix::new(arr2(&[[1.5, -2.0], [0.25, 8.0], [3.0, 0.5]])).unwrap();
        let part = Partition::singletons(2).unwrap();
        let red = reduce_by_partition(&x, &part).unwrap();
        assert_eq!(red.values(), x.values());
    }

    #[test]
    fn backproject_copies_cluster_coefficients() {
        let part = Partition::new(vec![1, 0, 1, 1], 2).unwrap();
        let coef = CoefVector::new(arr1(&[5.0, -1.0]), 0.25).unwrap();
        let full = backproject(&coef, &part).unwrap();
        assert_eq!(full.values(), &arr1(&[-1.0, 5.0, -1.0, -1.0]));
        assert_eq!(full.intercept(), 0.25);
        assert_eq!(full.support(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn backproject_checks_cluster_count() {
        let part = Partition::new(vec![0, 1], 2).unwrap();
        let coef = CoefVector::new(arr1(&[1.0]), 0.0).unwrap();
        assert!(backproject(&coef, &part).is_err());
    }
}
