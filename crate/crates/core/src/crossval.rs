//! Cross-validated parameter selection.
//!
//! Folds are contiguous blocks of a seeded shuffle, stratified by class
//! for classification targets. Each training fold is standardized on
//! its own rows and the fitted model is scored on the held-out fold,
//! by explained variance for regression and accuracy for
//! classification. The randomized selectors are tuned through their
//! non-randomized counterpart (a single sparse fit, on Ward cluster
//! averages for the clustered variant), which keeps the search cheap
//! and deterministic.

use ndarray::{Array1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{standardize_columns, reduce_by_partition, DesignMatrix, TargetVector, Task};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::SpatialGrid;
use crate::metrics::{accuracy, explained_variance};
use crate::seed::{self, domain};
use crate::solvers::{lambda_max, EnetProblem, LogisticProblem, Penalty};
use crate::ward::{cut_tree, ward_cluster};

pub const DEFAULT_FOLDS: usize = 6;
pub const LAMBDA_PATH_POINTS: usize = 15;
/// Smallest over largest penalty on the default path.
pub const LAMBDA_PATH_RATIO: f64 = 1e-3;
pub const RHO_GRID: [f64; 4] = [0.1, 0.5, 0.9, 1.0];
/// `p / d` for these divisors gives the candidate cluster counts.
pub const CLUSTER_DIVISORS: [usize; 5] = [64, 32, 16, 8, 4];

pub(crate) const FIT_TOL: f64 = 1e-6;
pub(crate) const FIT_MAX_ITER: usize = 1000;

/// The feature scorers this crate knows how to run end to end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "f-test")]
    FTest,
    #[serde(rename = "lasso")]
    Lasso,
    #[serde(rename = "enet")]
    ElasticNet,
    #[serde(rename = "randomized-lasso")]
    RandomizedLasso,
    #[serde(rename = "randomized-ward-lasso")]
    RandomizedWardLasso,
}

impl Method {
    pub fn all() -> [Method; 5] {
        [
            Method::FTest,
            Method::Lasso,
            Method::ElasticNet,
            Method::RandomizedLasso,
            Method::RandomizedWardLasso,
        ]
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::FTest => "f-test",
            Method::Lasso => "lasso",
            Method::ElasticNet => "enet",
            Method::RandomizedLasso => "randomized-lasso",
            Method::RandomizedWardLasso => "randomized-ward-lasso",
        }
    }

    /// True for the stability-selection variants.
    pub fn is_randomized(&self) -> bool {
        matches!(self, Method::RandomizedLasso | Method::RandomizedWardLasso)
    }

    pub fn needs_spatial(&self) -> bool {
        matches!(self, Method::RandomizedWardLasso)
    }

    /// Stable small integer naming this method in seed derivations.
    pub(crate) fn tag(&self) -> u64 {
        match self {
            Method::FTest => 0,
            Method::Lasso => 1,
            Method::ElasticNet => 2,
            Method::RandomizedLasso => 3,
            Method::RandomizedWardLasso => 4,
        }
    }

    /// False only for the screening baseline, which has nothing to tune.
    pub fn has_parameters(&self) -> bool {
        !matches!(self, Method::FTest)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f-test" => Ok(Method::FTest),
            "lasso" => Ok(Method::Lasso),
            "enet" => Ok(Method::ElasticNet),
            "randomized-lasso" => Ok(Method::RandomizedLasso),
            "randomized-ward-lasso" => Ok(Method::RandomizedWardLasso),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

/// One candidate parameter setting. `rho` only matters for the elastic
/// net, `q` only for the clustered selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub lambda: f64,
    pub rho: Option<f64>,
    pub q: Option<usize>,
}

impl ParamPoint {
    pub fn lasso(lambda: f64) -> Self {
        ParamPoint { lambda, rho: None, q: None }
    }

    pub fn enet(lambda: f64, rho: f64) -> Self {
        ParamPoint { lambda, rho: Some(rho), q: None }
    }

    pub fn clustered(lambda: f64, q: usize) -> Self {
        ParamPoint { lambda, rho: None, q: Some(q) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub grid: Vec<ParamPoint>,
    /// Held-out score per grid point, averaged over folds.
    pub mean_scores: Vec<f64>,
    pub selected_index: usize,
    pub selected: ParamPoint,
}

/// Assigns every sample to one of `n_folds` folds.
///
/// Samples are shuffled once with a stream derived from `seed`, then
/// cut into contiguous blocks whose sizes differ by at most one.
/// Classification targets are blocked class by class so each fold sees
/// both labels in proportion; the fold receiving each class's leftover
/// samples rotates with the running sample count, which keeps the
/// overall fold sizes balanced too.
pub fn fold_assignments(y: &TargetVector, n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = y.len();
    if n_folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {n_folds}")));
    }
    if n < n_folds {
        return Err(Error::invalid(format!("{n} samples cannot fill {n_folds} folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[domain::FOLDS]));
    let mut assignment = vec![0usize; n];
    let groups: Vec<Vec<usize>> = match y.task() {
        Task::Regression => vec![(0..n).collect()],
        Task::Classification => [-1.0, 1.0]
            .iter()
            .map(|&class| {
                y.values()
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == class)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect(),
    };
    let mut seen = 0usize;
    for mut idx in groups {
        idx.shuffle(&mut rng);
        let m = idx.len();
        let base = m / n_folds;
        let extra = m % n_folds;
        let offset = seen % n_folds;
        let mut pos = 0;
        for t in 0..n_folds {
            let fold = (offset + t) % n_folds;
            let size = base + usize::from(t < extra);
            for _ in 0..size {
                assignment[idx[pos]] = fold;
                pos += 1;
            }
        }
        seen += m;
    }
    Ok(assignment)
}

/// Log-spaced penalty path from `lambda_max` down to
/// `lambda_max * ratio`, strongest first.
pub fn lambda_path(lambda_max: f64, points: usize, ratio: f64) -> Result<Vec<f64>> {
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::invalid(format!(
            "penalty path needs a positive lambda_max, got {lambda_max}"
        )));
    }
    if points < 2 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid("path needs at least 2 points and a ratio in (0, 1)"));
    }
    Ok((0..points)
        .map(|i| lambda_max * ratio.powf(i as f64 / (points - 1) as f64))
        .collect())
}

/// The stock search grid for `method` on this dataset.
///
/// All paths descend from the data's own `lambda_max`: the elastic net
/// anchors each `rho` block at `lambda_max / rho`, and the clustered
/// selector anchors each cluster count at the `lambda_max` of the
/// corresponding cluster-averaged design, so every block starts at the
/// edge of full sparsity.
pub fn default_param_grid(
    method: Method,
    x: &DesignMatrix,
    y: &TargetVector,
    spatial: Option<&SpatialGrid>,
) -> Result<Vec<ParamPoint>> {
    if !method.has_parameters() {
        return Err(Error::invalid(format!("{method} has no parameters to tune")));
    }
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    let (xs, _) = standardize_columns(x);
    let yw = working_target(y);
    let lmax = lambda_max(&xs, &yw)?;
    match method {
        Method::Lasso | Method::RandomizedLasso => Ok(lambda_path(
            lmax,
            LAMBDA_PATH_POINTS,
            LAMBDA_PATH_RATIO,
        )?
        .into_iter()
        .map(ParamPoint::lasso)
        .collect()),
        Method::ElasticNet => {
            if y.task() == Task::Classification {
                return Err(Error::invalid(
                    "the elastic net here is square-loss only; classification targets are not supported",
                ));
            }
            let mut grid = Vec::new();
            for &rho in &RHO_GRID {
                for l in lambda_path(lmax / rho, LAMBDA_PATH_POINTS, LAMBDA_PATH_RATIO)? {
                    grid.push(ParamPoint::enet(l, rho));
                }
            }
            Ok(grid)
        }
        Method::RandomizedWardLasso => {
            let grid_geom = spatial
                .ok_or_else(|| Error::invalid("the clustered selector needs the spatial grid"))?;
            if grid_geom.node_count() != x.n_features() {
                return Err(Error::shape(format!(
                    "matrix has {} columns but grid has {} nodes",
                    x.n_features(),
                    grid_geom.node_count()
                )));
            }
            let p = x.n_features();
            let mut qs: Vec<usize> =
                CLUSTER_DIVISORS.iter().map(|&d| (p / d).max(1)).collect();
            qs.dedup();
            let tree = ward_cluster(&xs, grid_geom)?;
            let mut grid = Vec::new();
            for q in qs {
                let part = cut_tree(&tree, q)?;
                let reduced = reduce_by_partition(&xs, &part)?;
                let lmax_q = lambda_max(&reduced, &yw)?;
                for l in lambda_path(lmax_q, LAMBDA_PATH_POINTS, LAMBDA_PATH_RATIO)? {
                    grid.push(ParamPoint::clustered(l, q));
                }
            }
            Ok(grid)
        }
        Method::FTest => unreachable!(),
    }
}

/// Picks the grid point with the best mean held-out score.
///
/// Ties go to the smallest `lambda`, then the smallest `q`, then the
/// smallest `rho`. Folds are evaluated independently (in parallel under
/// the `parallel` feature) and merged by index, so the report does not
/// depend on scheduling.
pub fn cross_validate(
    method: Method,
    x: &DesignMatrix,
    y: &TargetVector,
    spatial: Option<&SpatialGrid>,
    grid: &[ParamPoint],
    n_folds: usize,
    seed: u64,
) -> Result<CvReport> {
    if !method.has_parameters() {
        return Err(Error::invalid(format!("{method} has no parameters to tune")));
    }
    if method == Method::ElasticNet && y.task() == Task::Classification {
        return Err(Error::invalid(
            "the elastic net here is square-loss only; classification targets are not supported",
        ));
    }
    if grid.is_empty() {
        return Err(Error::invalid("empty parameter grid"));
    }
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    for point in grid {
        if !(point.lambda.is_finite() && point.lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", point.lambda)));
        }
        if let Some(rho) = point.rho {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::invalid(format!("rho must lie in (0, 1], got {rho}")));
            }
        }
        if let Some(q) = point.q {
            if q == 0 || q > x.n_features() {
                return Err(Error::invalid(format!(
                    "cluster count {q} out of range for {} features",
                    x.n_features()
                )));
            }
        }
        if method.needs_spatial() && point.q.is_none() {
            return Err(Error::invalid("clustered grid points need a cluster count"));
        }
    }
    let spatial = if method.needs_spatial() {
        let g = spatial
            .ok_or_else(|| Error::invalid("the clustered selector needs the spatial grid"))?;
        if g.node_count() != x.n_features() {
            return Err(Error::shape(format!(
                "matrix has {} columns but grid has {} nodes",
                x.n_features(),
                g.node_count()
            )));
        }
        Some(g)
    } else {
        None
    };

    let assignment = fold_assignments(y, n_folds, seed)?;
    let fold_scores = exec::try_map_indexed(n_folds, |f| -> Result<Vec<f64>> {
        let train: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == f).collect();
        score_fold(method, x, y, spatial, grid, &train, &test)
    })?;

    let mut mean_scores = vec![0.0f64; grid.len()];
    for scores in &fold_scores {
        for (m, s) in mean_scores.iter_mut().zip(scores) {
            *m += s;
        }
    }
    for m in &mut mean_scores {
        *m /= n_folds as f64;
    }

    let mut best = 0;
    for i in 1..grid.len() {
        if prefer(mean_scores[i], &grid[i], mean_scores[best], &grid[best]) {
            best = i;
        }
    }
    Ok(CvReport {
        folds: n_folds,
        grid: grid.to_vec(),
        mean_scores,
        selected_index: best,
        selected: grid[best],
    })
}

fn prefer(score: f64, point: &ParamPoint, incumbent_score: f64, incumbent: &ParamPoint) -> bool {
    if score != incumbent_score {
        return score > incumbent_score;
    }
    if point.lambda != incumbent.lambda {
        return point.lambda < incumbent.lambda;
    }
    let q = point.q.unwrap_or(0);
    let iq = incumbent.q.unwrap_or(0);
    if q != iq {
        return q < iq;
    }
    point.rho.unwrap_or(1.0) < incumbent.rho.unwrap_or(1.0)
}

/// Regression targets are centered on the training mean before the fit
/// and the mean is added back to predictions; classification targets
/// pass through, the logistic intercept doing the centering.
pub(crate) fn working_target(y: &TargetVector) -> TargetVector {
    match y.task() {
        Task::Regression => {
            let mean = y.values().sum() / y.len() as f64;
            TargetVector::new_unchecked(y.values().mapv(|v| v - mean), Task::Regression)
        }
        Task::Classification => y.clone(),
    }
}

fn score_fold(
    method: Method,
    x: &DesignMatrix,
    y: &TargetVector,
    spatial: Option<&SpatialGrid>,
    grid: &[ParamPoint],
    train: &[usize],
    test: &[usize],
) -> Result<Vec<f64>> {
    let x_train = DesignMatrix::new_unchecked(x.values().select(Axis(0), train));
    let x_test = DesignMatrix::new_unchecked(x.values().select(Axis(0), test));
    let y_train: Array1<f64> = train.iter().map(|&i| y.values()[i]).collect();
    let y_test: Vec<f64> = test.iter().map(|&i| y.values()[i]).collect();

    let (xs, stdz) = standardize_columns(&x_train);
    let xt = stdz.apply(&x_test)?;

    match y.task() {
        Task::Regression => {
            let y_mean = y_train.sum() / y_train.len() as f64;
            let yc = y_train.mapv(|v| v - y_mean);
            let mut scores = Vec::with_capacity(grid.len());
            if method.needs_spatial() {
                let tree = ward_cluster(&xs, spatial.unwrap())?;
                let mut active: Option<(usize, EnetProblem, DesignMatrix)> = None;
                let mut warm: Option<Array1<f64>> = None;
                for point in grid {
                    let q = point.q.unwrap();
                    if active.as_ref().map(|(aq, _, _)| *aq) != Some(q) {
                        let part = cut_tree(&tree, q)?;
                        let red_train = reduce_by_partition(&xs, &part)?;
                        let red_test = reduce_by_partition(&xt, &part)?;
                        active = Some((
                            q,
                            EnetProblem::new(red_train.values().view(), yc.view()),
                            red_test,
                        ));
                        warm = None;
                    }
                    let (_, problem, red_test) = active.as_ref().unwrap();
                    let fit =
                        problem.fit(point.lambda, 1.0, FIT_TOL, FIT_MAX_ITER, warm.as_ref());
                    let pred: Vec<f64> =
                        red_test.values().dot(&fit.beta).iter().map(|v| v + y_mean).collect();
                    scores.push(explained_variance(&y_test, &pred)?);
                    warm = Some(fit.beta);
                }
            } else {
                let problem = EnetProblem::new(xs.values().view(), yc.view());
                let mut warm: Option<Array1<f64>> = None;
                let mut warm_rho = f64::NAN;
                for point in grid {
                    let rho = point.rho.unwrap_or(1.0);
                    if rho.to_bits() != warm_rho.to_bits() {
                        warm = None;
                        warm_rho = rho;
                    }
                    let fit =
                        problem.fit(point.lambda, rho, FIT_TOL, FIT_MAX_ITER, warm.as_ref());
                    let pred: Vec<f64> =
                        xt.values().dot(&fit.beta).iter().map(|v| v + y_mean).collect();
                    scores.push(explained_variance(&y_test, &pred)?);
                    warm = Some(fit.beta);
                }
            }
            Ok(scores)
        }
        Task::Classification => {
            let mut scores = Vec::with_capacity(grid.len());
            if method.needs_spatial() {
                let tree = ward_cluster(&xs, spatial.unwrap())?;
                let mut active: Option<(usize, LogisticProblem, DesignMatrix)> = None;
                let mut warm: Option<(Array1<f64>, f64)> = None;
                for point in grid {
                    let q = point.q.unwrap();
                    if active.as_ref().map(|(aq, _, _)| *aq) != Some(q) {
                        let part = cut_tree(&tree, q)?;
                        let red_train = reduce_by_partition(&xs, &part)?;
                        let red_test = reduce_by_partition(&xt, &part)?;
                        active = Some((
                            q,
                            LogisticProblem::new(red_train.values().view(), y_train.view()),
                            red_test,
                        ));
                        warm = None;
                    }
                    let (_, problem, red_test) = active.as_ref().unwrap();
                    let fit = problem.fit(
                        point.lambda,
                        Penalty::L1,
                        FIT_TOL,
                        FIT_MAX_ITER,
                        warm.as_ref().map(|(b, b0)| (b, *b0)),
                    );
                    scores.push(label_accuracy(red_test.values(), &fit.beta, fit.intercept, &y_test)?);
                    warm = Some((fit.beta, fit.intercept));
                }
            } else {
                let problem = LogisticProblem::new(xs.values().view(), y_train.view());
                let mut warm: Option<(Array1<f64>, f64)> = None;
                for point in grid {
                    let fit = problem.fit(
                        point.lambda,
                        Penalty::L1,
                        FIT_TOL,
                        FIT_MAX_ITER,
                        warm.as_ref().map(|(b, b0)| (b, *b0)),
                    );
                    scores.push(label_accuracy(xt.values(), &fit.beta, fit.intercept, &y_test)?);
                    warm = Some((fit.beta, fit.intercept));
                }
            }
            Ok(scores)
        }
    }
}

pub(crate) fn label_accuracy(
    x_test: &ndarray::Array2<f64>,
    beta: &Array1<f64>,
    intercept: f64,
    y_test: &[f64],
) -> Result<f64> {
    let pred: Vec<f64> = x_test
        .dot(beta)
        .iter()
        .map(|&eta| if eta + intercept >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    accuracy(y_test, &pred)
}
