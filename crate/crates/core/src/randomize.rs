//! The randomized selection loop.
//!
//! Each repetition perturbs the problem twice: it keeps a random
//! subset of the rows, and it multiplies a random half of the columns
//! by `1 - alpha`. A sparse model is fitted to the perturbed data at a
//! fixed `lambda` and the support is recorded; a feature's stability
//! score is the fraction of repetitions that selected it.
//!
//! The clustered variant inserts a reduction step before the fit: the
//! perturbed columns are agglomerated into `clusters` connected
//! patches, the fit runs on patch averages, and a feature counts as
//! selected when its patch's coefficient is nonzero. Where the patches
//! come from is controlled by [`ClusterSource`]; anything other than
//! [`ClusterSource::Randomized`] exists for ablation comparisons.
//!
//! Every repetition seeds its own ChaCha stream from the configured
//! seed and its repetition index, so scores are reproducible bit for
//! bit regardless of how repetitions are scheduled across threads.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{reduce_by_partition, DesignMatrix, StabilityScores, TargetVector, Task};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::SpatialGrid;
use crate::seed::{self, domain};
use crate::solvers::{lasso_cd, logistic_l1, SolverConfig};
use crate::ward::{cut_tree, ward_cluster};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizationConfig {
    /// Rescaling strength in `[0, 1)`: affected columns are multiplied
    /// by `1 - alpha`.
    pub alpha: f64,
    /// Fraction of rows kept per repetition, in `(0, 1]`.
    pub subsample_fraction: f64,
    /// Number of repetitions.
    pub repetitions: usize,
    /// Penalty at which every repetition's model is fitted.
    pub lambda: f64,
    /// Patch count for the clustered variant; ignored by
    /// [`randomized_lasso`].
    pub clusters: Option<usize>,
    pub seed: u64,
}

impl RandomizationConfig {
    pub fn new(lambda: f64, seed: u64) -> Self {
        RandomizationConfig {
            alpha: 0.5,
            subsample_fraction: 0.75,
            repetitions: 200,
            lambda,
            clusters: None,
            seed,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_subsample_fraction(mut self, fraction: f64) -> Self {
        self.subsample_fraction = fraction;
        self
    }

    pub fn with_repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn with_clusters(mut self, clusters: usize) -> Self {
        self.clusters = Some(clusters);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1), got {}", self.alpha)));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "subsample fraction must lie in (0, 1], got {}",
                self.subsample_fraction
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("at least one repetition is required"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Where each repetition's clustering tree comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterSource {
    /// Cluster the perturbed data of the repetition itself.
    #[serde(rename = "randomized")]
    Randomized,
    /// Cluster the unperturbed data once; all repetitions share the
    /// resulting partition.
    #[serde(rename = "fixed-on-full-data")]
    FixedOnFullData,
    /// Cluster a fresh pure-noise matrix per repetition, destroying
    /// any relation between partition and signal.
    #[serde(rename = "random-iid-signal")]
    RandomIidSignal,
}

impl ClusterSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClusterSource::Randomized => "randomized",
            ClusterSource::FixedOnFullData => "fixed-on-full-data",
            ClusterSource::RandomIidSignal => "random-iid-signal",
        }
    }
}

impl std::fmt::Display for ClusterSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClusterSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "randomized" => Ok(ClusterSource::Randomized),
            "fixed-on-full-data" => Ok(ClusterSource::FixedOnFullData),
            "random-iid-signal" => Ok(ClusterSource::RandomIidSignal),
            other => Err(Error::invalid(format!("unknown cluster source {other:?}"))),
        }
    }
}

/// Number of rows a subsample keeps: `fraction * n` rounded, but at
/// least 2 and at most `n`.
pub fn subsample_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(2, n)
}

/// Keeps a random subset of rows, preserving row order.
///
/// Regression targets are subsampled uniformly without replacement.
/// Classification targets are subsampled per class so the kept rows
/// mirror the class proportions: class counts follow largest-remainder
/// rounding (ties to class -1), clamped so both classes survive.
pub fn subsample<R: Rng>(
    x: &DesignMatrix,
    y: &TargetVector,
    fraction: f64,
    rng: &mut R,
) -> Result<(DesignMatrix, TargetVector)> {
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "subsample fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let rows = subsample_rows(y, fraction, rng);
    let xs = x.values().select(ndarray::Axis(0), &rows);
    let ys = rows.iter().map(|&i| y.values()[i]).collect::<Array1<f64>>();
    Ok((
        DesignMatrix::new_unchecked(xs),
        TargetVector::new_unchecked(ys, y.task()),
    ))
}

fn subsample_rows<R: Rng>(y: &TargetVector, fraction: f64, rng: &mut R) -> Vec<usize> {
    let n = y.len();
    let m = subsample_size(n, fraction);
    let mut rows = match y.task() {
        Task::Regression => rand::seq::index::sample(rng, n, m).into_vec(),
        Task::Classification => {
            let neg: Vec<usize> = (0..n).filter(|&i| y.values()[i] == -1.0).collect();
            let pos: Vec<usize> = (0..n).filter(|&i| y.values()[i] == 1.0).collect();
            let (m_neg, m_pos) = split_between_classes(m, neg.len(), pos.len());
            let mut rows = Vec::with_capacity(m);
            for i in rand::seq::index::sample(rng, neg.len(), m_neg) {
                rows.push(neg[i]);
            }
            for i in rand::seq::index::sample(rng, pos.len(), m_pos) {
                rows.push(pos[i]);
            }
            rows
        }
    };
    rows.sort_unstable();
    rows
}

/// Largest-remainder split of `m` draws over two groups, favouring the
/// first group on remainder ties, with both groups kept nonempty.
fn split_between_classes(m: usize, n_neg: usize, n_pos: usize) -> (usize, usize) {
    let n = (n_neg + n_pos) as f64;
    let quota_neg = m as f64 * n_neg as f64 / n;
    let mut m_neg = quota_neg.floor() as usize;
    let quota_pos = m as f64 * n_pos as f64 / n;
    let mut m_pos = quota_pos.floor() as usize;
    let frac_neg = quota_neg - m_neg as f64;
    let frac_pos = quota_pos - m_pos as f64;
    let mut short = m - m_neg - m_pos;
    if short > 0 && frac_neg >= frac_pos {
        m_neg += 1;
        short -= 1;
    }
    m_pos += short;
    // both classes must survive and fit
    if m_neg == 0 {
        m_neg = 1;
        m_pos = m - 1;
    }
    if m_pos == 0 {
        m_pos = 1;
        m_neg = m - 1;
    }
    if m_neg > n_neg {
        m_neg = n_neg;
        m_pos = m - n_neg;
    }
    if m_pos > n_pos {
        m_pos = n_pos;
        m_neg = m - n_pos;
    }
    (m_neg, m_pos)
}

/// Multiplies a fair-coin half of the columns by `1 - alpha`.
///
/// One coin is drawn per column, in column order.
pub fn random_rescale<R: Rng>(
    x: &DesignMatrix,
    alpha: f64,
    rng: &mut R,
) -> Result<DesignMatrix> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let mut out = x.values().clone();
    rescale_in_place(&mut out, alpha, rng);
    Ok(DesignMatrix::new_unchecked(out))
}

fn rescale_in_place<R: Rng>(values: &mut Array2<f64>, alpha: f64, rng: &mut R) {
    let shrink = 1.0 - alpha;
    for mut col in values.columns_mut() {
        if rng.random_bool(0.5) {
            col.mapv_inplace(|v| v * shrink);
        }
    }
}

/// Stability scores from repeated subsample-and-rescale lasso fits
/// (l1 logistic fits for classification targets).
pub fn randomized_lasso(
    x: &DesignMatrix,
    y: &TargetVector,
    cfg: &RandomizationConfig,
) -> Result<StabilityScores> {
    cfg.validate()?;
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    let base = seed::derive(cfg.seed, &[domain::STABILITY]);
    let supports = exec::try_map_indexed(cfg.repetitions, |rep| {
        let mut rng = rep_rng(base, rep);
        let (xs, ys) = perturb(x, y, cfg, &mut rng);
        fit_support(&xs, &ys, cfg.lambda)
    })?;
    scores_from_supports(&supports, x.n_features(), cfg.repetitions)
}

/// Stability scores from the clustered loop: perturb, agglomerate into
/// `cfg.clusters` connected patches, fit on patch averages, count every
/// feature of each selected patch.
pub fn randomized_ward_lasso(
    x: &DesignMatrix,
    y: &TargetVector,
    grid: &SpatialGrid,
    cfg: &RandomizationConfig,
    source: ClusterSource,
) -> Result<StabilityScores> {
    cfg.validate()?;
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    if x.n_features() != grid.node_count() {
        return Err(Error::shape(format!(
            "matrix has {} columns but grid has {} nodes",
            x.n_features(),
            grid.node_count()
        )));
    }
    let q = cfg
        .clusters
        .ok_or_else(|| Error::invalid("the clustered loop needs cfg.clusters"))?;
    if q == 0 || q > x.n_features() {
        return Err(Error::invalid(format!(
            "cluster count {q} out of range for {} features",
            x.n_features()
        )));
    }
    let shared_partition = match source {
        ClusterSource::FixedOnFullData => Some(cut_tree(&ward_cluster(x, grid)?, q)?),
        _ => None,
    };
    let base = seed::derive(cfg.seed, &[domain::STABILITY]);
    let supports = exec::try_map_indexed(cfg.repetitions, |rep| -> Result<Vec<usize>> {
        let mut rng = rep_rng(base, rep);
        let (xs, ys) = perturb(x, y, cfg, &mut rng);
        let partition = match source {
            ClusterSource::Randomized => cut_tree(&ward_cluster(&xs, grid)?, q)?,
            ClusterSource::FixedOnFullData => shared_partition.clone().unwrap(),
            ClusterSource::RandomIidSignal => {
                let noise = Array2::from_shape_simple_fn(
                    (xs.n_samples(), xs.n_features()),
                    || rng.sample::<f64, _>(StandardNormal),
                );
                cut_tree(&ward_cluster(&DesignMatrix::new_unchecked(noise), grid)?, q)?
            }
        };
        let reduced = reduce_by_partition(&xs, &partition)?;
        let cluster_support = fit_support(&reduced, &ys, cfg.lambda)?;
        let chosen: std::collections::HashSet<usize> = cluster_support.into_iter().collect();
        Ok(partition
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, l)| chosen.contains(*l))
            .map(|(j, _)| j)
            .collect())
    })?;
    scores_from_supports(&supports, x.n_features(), cfg.repetitions)
}

/// Features whose stability score exceeds `threshold`, ascending.
pub fn stability_support(scores: &StabilityScores, threshold: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }
    Ok(scores.selected(threshold))
}

fn rep_rng(base: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(rep as u64);
    rng
}

fn perturb(
    x: &DesignMatrix,
    y: &TargetVector,
    cfg: &RandomizationConfig,
    rng: &mut ChaCha8Rng,
) -> (DesignMatrix, TargetVector) {
    let rows = subsample_rows(y, cfg.subsample_fraction, rng);
    let mut xs = x.values().select(ndarray::Axis(0), &rows);
    let ys: Array1<f64> = rows.iter().map(|&i| y.values()[i]).collect();
    rescale_in_place(&mut xs, cfg.alpha, rng);
    (
        DesignMatrix::new_unchecked(xs),
        TargetVector::new_unchecked(ys, y.task()),
    )
}

fn fit_support(x: &DesignMatrix, y: &TargetVector, lambda: f64) -> Result<Vec<usize>> {
    let cfg = SolverConfig::new(lambda);
    let fit = match y.task() {
        Task::Regression => lasso_cd(x, y, &cfg)?,
        Task::Classification => logistic_l1(x, y, &cfg)?,
    };
    Ok(fit.coef.support())
}

fn scores_from_supports(
    supports: &[Vec<usize>],
    p: usize,
    repetitions: usize,
) -> Result<StabilityScores> {
    let mut counts = vec![0u32; p];
    for support in supports {
        for &j in support {
            counts[j] += 1;
        }
    }
    StabilityScores::from_counts(&counts, repetitions)
}
