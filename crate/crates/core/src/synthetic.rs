//! Synthetic benchmark with spatially correlated designs and patchy
//! ground truth.
//!
//! Each sample starts as an i.i.d. standard-normal image on the pixel
//! grid and is blurred with a separable Gaussian kernel; blurring is
//! what makes neighbouring features correlated. Columns are
//! standardized after blurring. The true weight vector puts its
//! `support_size` nonzero entries in compact same-size patches spread
//! over the grid, and the target adds white noise scaled to hit a
//! requested explained-variance ratio.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{
    standardize_columns, DesignMatrix, GroundTruth, TargetVector, Task,
};
use crate::error::{Error, Result};
use crate::seed::{self, domain};

/// Recipe for one synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub rows: usize,
    pub cols: usize,
    pub n_samples: usize,
    /// Total nonzero weights, split into patches of `cluster_size`.
    pub support_size: usize,
    /// Pixels per patch; a power of two between 1 and 64 dividing
    /// `support_size`.
    pub cluster_size: usize,
    /// Gaussian blur width in pixels; 0 disables blurring.
    pub smoothing: f64,
    /// Lower edge of the nonzero-weight distribution
    /// `Uniform[beta_min, 1 + beta_min]`.
    pub beta_min: f64,
    /// Fraction of target variance carried by the signal, in `(0, 1]`.
    pub explained_variance: f64,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            rows: 32,
            cols: 64,
            n_samples: 128,
            support_size: 64,
            cluster_size: 16,
            smoothing: 2.0,
            beta_min: 0.2,
            explained_variance: 0.8,
            seed: 0,
        }
    }
}

const PATCH_SIZES: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

impl SimSpec {
    pub fn with_n_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_cluster_size(mut self, c: usize) -> Self {
        self.cluster_size = c;
        self
    }

    pub fn with_smoothing(mut self, sigma: f64) -> Self {
        self.smoothing = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n_features(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        if self.n_samples < 2 {
            return Err(Error::invalid("need at least 2 samples"));
        }
        if self.support_size == 0 || self.support_size > self.n_features() {
            return Err(Error::invalid(format!(
                "support size {} out of range for {} features",
                self.support_size,
                self.n_features()
            )));
        }
        if !PATCH_SIZES.contains(&self.cluster_size) {
            return Err(Error::invalid(format!(
                "cluster size must be one of {PATCH_SIZES:?}, got {}",
                self.cluster_size
            )));
        }
        if self.support_size % self.cluster_size != 0 {
            return Err(Error::invalid(format!(
                "cluster size {} must divide support size {}",
                self.cluster_size, self.support_size
            )));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(Error::invalid("smoothing must be a finite non-negative number"));
        }
        if !(self.beta_min.is_finite() && self.beta_min >= 0.0) {
            return Err(Error::invalid("beta_min must be non-negative"));
        }
        if !(self.explained_variance > 0.0 && self.explained_variance <= 1.0) {
            return Err(Error::invalid(format!(
                "explained variance must lie in (0, 1], got {}",
                self.explained_variance
            )));
        }
        Ok(())
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut weights: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    weights
}

fn reflect(mut i: i64, n: i64) -> usize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Blurs an image with a normalized separable Gaussian kernel of
/// radius `ceil(4 sigma)`, reflecting at the borders.
pub fn gaussian_smooth_2d(image: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let (rows, cols) = image.dim();
    let mut horizontal = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for (t, &w) in kernel.iter().enumerate() {
                let src = reflect(c as i64 + t as i64 - radius, cols as i64);
                acc += w * image[[r, src]];
            }
            horizontal[[r, c]] = acc;
        }
    }
    let mut out = Array2::zeros((rows, cols));
    for c in 0..cols {
        for r in 0..rows {
            let mut acc = 0.0;
            for (t, &w) in kernel.iter().enumerate() {
                let src = reflect(r as i64 + t as i64 - radius, rows as i64);
                acc += w * horizontal[[src, c]];
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Height and width of a patch of `c` pixels: square when `c` is a
/// perfect square, otherwise twice as wide as tall.
fn patch_shape(c: usize) -> (usize, usize) {
    let root = (c as f64).sqrt().round() as usize;
    if root * root == c {
        (root, root)
    } else {
        // c = 2 s^2 for the remaining powers of two
        let side = ((c / 2) as f64).sqrt().round() as usize;
        debug_assert_eq!(2 * side * side, c);
        (side, 2 * side)
    }
}

#[derive(Clone, Copy)]
struct Patch {
    r0: usize,
    c0: usize,
    h: usize,
    w: usize,
}

impl Patch {
    fn r1(&self) -> usize {
        self.r0 + self.h - 1
    }

    fn c1(&self) -> usize {
        self.c0 + self.w - 1
    }
}

/// Gap between two inclusive ranges; -1 when they overlap.
fn range_gap(a0: usize, a1: usize, b0: usize, b1: usize) -> i64 {
    if b0 > a1 {
        (b0 - a1) as i64 - 1
    } else if a0 > b1 {
        (a0 - b1) as i64 - 1
    } else {
        -1
    }
}

fn patches_conflict(a: &Patch, b: &Patch) -> bool {
    let gr = range_gap(a.r0, a.r1(), b.r0, b.r1());
    let gc = range_gap(a.c0, a.c1(), b.c0, b.c1());
    // overlapping, or touching in the 4-neighbourhood sense
    (gr == -1 && gc == -1) || (gr == -1 && gc == 0) || (gr == 0 && gc == -1)
}

fn place_patches(spec: &SimSpec) -> Result<Vec<Patch>> {
    let (h, w) = patch_shape(spec.cluster_size);
    let m = spec.support_size / spec.cluster_size;
    // candidate lattice factorizations, most square-ish cells first
    let mut factorizations: Vec<(usize, usize)> = (1..=m)
        .filter(|d| m % d == 0)
        .map(|d| (d, m / d))
        .collect();
    factorizations.sort_by(|&(ar, ac), &(br, bc)| {
        let aspect = |gr: usize, gc: usize| {
            ((spec.rows as f64 / gr as f64) / (spec.cols as f64 / gc as f64))
                .ln()
                .abs()
        };
        aspect(ar, ac)
            .total_cmp(&aspect(br, bc))
            .then(ar.cmp(&br))
    });
    'candidates: for (gr, gc) in factorizations {
        if spec.rows / gr < h || spec.cols / gc < w {
            continue;
        }
        let mut patches = Vec::with_capacity(m);
        for i in 0..gr {
            for j in 0..gc {
                let top = i * spec.rows / gr;
                let bottom = (i + 1) * spec.rows / gr;
                let left = j * spec.cols / gc;
                let right = (j + 1) * spec.cols / gc;
                if bottom - top < h || right - left < w {
                    continue 'candidates;
                }
                patches.push(Patch {
                    r0: top + (bottom - top - h) / 2,
                    c0: left + (right - left - w) / 2,
                    h,
                    w,
                });
            }
        }
        let ok = patches.iter().enumerate().all(|(i, a)| {
            patches[i + 1..].iter().all(|b| !patches_conflict(a, b))
        });
        if ok {
            return Ok(patches);
        }
    }
    Err(Error::invalid(format!(
        "cannot place {m} non-adjacent {h}x{w} patches on a {}x{} grid",
        spec.rows, spec.cols
    )))
}

/// Draws ground-truth weights: `support_size / cluster_size` compact
/// patches centred on a lattice, pairwise non-adjacent, each nonzero
/// weight i.i.d. `Uniform[beta_min, 1 + beta_min]`.
pub fn make_weights<R: Rng>(spec: &SimSpec, rng: &mut R) -> Result<GroundTruth> {
    spec.validate()?;
    let patches = place_patches(spec)?;
    let mut weights = vec![0.0; spec.n_features()];
    for p in &patches {
        for r in p.r0..=p.r1() {
            for c in p.c0..=p.c1() {
                weights[r * spec.cols + c] = spec.beta_min + rng.random::<f64>();
            }
        }
    }
    let (h, w) = patch_shape(spec.cluster_size);
    Ok(GroundTruth::new(
        weights,
        h,
        w,
        patches.iter().map(|p| (p.r0, p.c0)).collect(),
    ))
}

/// Generates one dataset: blurred standardized design, patchy weights,
/// and a noisy linear target at the requested explained variance.
pub fn generate_dataset(spec: &SimSpec) -> Result<(DesignMatrix, TargetVector, GroundTruth)> {
    spec.validate()?;
    let mut weight_rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[domain::WEIGHTS]));
    let truth = make_weights(spec, &mut weight_rng)?;

    let p = spec.n_features();
    let mut design_rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[domain::DESIGN]));
    let mut x = Array2::zeros((spec.n_samples, p));
    for mut row in x.rows_mut() {
        let image = Array2::from_shape_simple_fn((spec.rows, spec.cols), || {
            design_rng.sample::<f64, _>(StandardNormal)
        });
        let smoothed = gaussian_smooth_2d(&image, spec.smoothing);
        for (dst, &src) in row.iter_mut().zip(smoothed.iter()) {
            *dst = src;
        }
    }
    let (x, _) = standardize_columns(&DesignMatrix::new_unchecked(x));

    let w = Array1::from_vec(truth.weights().to_vec());
    let signal = x.values().dot(&w);
    let mean = signal.sum() / spec.n_samples as f64;
    let var = signal.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>()
        / spec.n_samples as f64;
    if var <= 0.0 {
        return Err(Error::invalid("generated signal has zero variance"));
    }
    let evr = spec.explained_variance;
    let sigma_noise = var.sqrt() * ((1.0 - evr) / evr).sqrt();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[domain::NOISE]));
    let noise = Array1::from_shape_simple_fn(spec.n_samples, || {
        noise_rng.sample::<f64, _>(StandardNormal)
    });
    // calibrate the realized draw, not just its distribution: center
    // it, remove its sample correlation with the signal, and scale it
    // to sigma_noise, so the signal explains exactly the requested
    // share of this dataset's variance
    let centered_signal = &signal - mean;
    let noise_mean = noise.sum() / spec.n_samples as f64;
    let mut residual = &noise - noise_mean;
    let overlap = residual.dot(&centered_signal) / centered_signal.dot(&centered_signal);
    residual = residual - &centered_signal * overlap;
    let residual_var = residual.dot(&residual) / spec.n_samples as f64;
    if residual_var <= 0.0 {
        return Err(Error::invalid("degenerate noise draw"));
    }
    let y = signal + residual * (sigma_noise / residual_var.sqrt());
    Ok((x, TargetVector::new_unchecked(y, Task::Regression), truth))
}

/// Rule-of-thumb sample count for reliable recovery of a `k`-sparse
/// signal among `p` features: `2 theta k ln(p - k)`.
pub fn nmin_estimate(k: usize, p: usize, theta: f64) -> Result<f64> {
    if k == 0 || p <= k {
        return Err(Error::invalid(format!("need 0 < k < p, got k={k}, p={p}")));
    }
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::invalid(format!("theta must be positive, got {theta}")));
    }
    Ok(2.0 * theta * k as f64 * ((p - k) as f64).ln())
}

/// Median split of a regression target into balanced classes.
///
/// Rows are ranked by `(value, index)`; the lower `ceil(n/2)` ranks
/// become class -1 and the rest class +1, so ties and odd lengths
/// split deterministically.
pub fn binarize_target(y: &TargetVector) -> Result<TargetVector> {
    if y.task() != Task::Regression {
        return Err(Error::invalid("only regression targets can be binarized"));
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::invalid("need at least 2 rows to form two classes"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        y.values()[a]
            .total_cmp(&y.values()[b])
            .then(a.cmp(&b))
    });
    let mut labels = Array1::zeros(n);
    let low = n.div_ceil(2);
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = if rank < low { -1.0 } else { 1.0 };
    }
    TargetVector::new(labels, Task::Classification)
}
