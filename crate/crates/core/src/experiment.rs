//! End-to-end recovery and prediction experiments on synthetic data.
//!
//! The drivers here wire together data generation, parameter selection
//! and feature scoring. Every random ingredient is keyed by its
//! coordinates (cell, seed index, method, experiment phase), so a run
//! is reproducible from one seed, results do not depend on evaluation
//! order or thread count, and all methods inside a comparison see the
//! same datasets.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use crate::crossval::{
    cross_validate, default_param_grid, fold_assignments, label_accuracy, lambda_path,
    working_target, Method, ParamPoint, DEFAULT_FOLDS, FIT_MAX_ITER, FIT_TOL,
    LAMBDA_PATH_POINTS, LAMBDA_PATH_RATIO,
};
use crate::data::{standardize_columns, DesignMatrix, TargetVector, Task};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::SpatialGrid;
use crate::metrics::pr_and_roc;
use crate::randomize::{randomized_lasso, randomized_ward_lasso, ClusterSource, RandomizationConfig};
use crate::seed::{self, domain};
use crate::solvers::{enet_cd, lasso_cd, logistic_l1, lambda_max, univariate_f_scores, LogisticProblem, Penalty, SolverConfig};
use crate::synthetic::SimSpec;

/// Perturbation settings shared by the randomized scorers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityParams {
    pub alpha: f64,
    pub subsample_fraction: f64,
    pub repetitions: usize,
}

impl Default for StabilityParams {
    fn default() -> Self {
        StabilityParams { alpha: 0.5, subsample_fraction: 0.75, repetitions: 200 }
    }
}

impl StabilityParams {
    pub fn with_repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = repetitions;
        self
    }

    fn to_config(self, lambda: f64, seed: u64) -> RandomizationConfig {
        RandomizationConfig::new(lambda, seed)
            .with_alpha(self.alpha)
            .with_subsample_fraction(self.subsample_fraction)
            .with_repetitions(self.repetitions)
    }
}

/// Per-feature relevance scores from one method at one parameter
/// setting.
///
/// The F test scores raw features and takes no parameters. The sparse
/// fits run on the standardized design (regression targets centered)
/// and score by absolute coefficient. The randomized variants return
/// selection frequencies; `seed` only matters for those two.
pub fn score_features(
    method: Method,
    x: &DesignMatrix,
    y: &TargetVector,
    spatial: Option<&SpatialGrid>,
    point: Option<&ParamPoint>,
    stability: &StabilityParams,
    seed: u64,
) -> Result<Array1<f64>> {
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    if method == Method::FTest {
        if point.is_some() {
            return Err(Error::invalid("the F test takes no parameter point"));
        }
        return univariate_f_scores(x, y);
    }
    let point =
        point.ok_or_else(|| Error::invalid(format!("{method} needs a parameter point")))?;
    let (xs, _) = standardize_columns(x);
    let yw = working_target(y);
    let cfg = SolverConfig::new(point.lambda);
    match method {
        Method::Lasso => {
            let fit = match y.task() {
                Task::Regression => lasso_cd(&xs, &yw, &cfg)?,
                Task::Classification => logistic_l1(&xs, &yw, &cfg)?,
            };
            Ok(fit.coef.values().mapv(f64::abs))
        }
        Method::ElasticNet => {
            if y.task() == Task::Classification {
                return Err(Error::invalid(
                    "the elastic net here is square-loss only; classification targets are not supported",
                ));
            }
            let fit = enet_cd(&xs, &yw, &cfg.with_rho(point.rho.unwrap_or(1.0)))?;
            Ok(fit.coef.values().mapv(f64::abs))
        }
        Method::RandomizedLasso => {
            let scores =
                randomized_lasso(&xs, &yw, &stability.to_config(point.lambda, seed))?;
            Ok(scores.scores().clone())
        }
        Method::RandomizedWardLasso => {
            let grid = spatial
                .ok_or_else(|| Error::invalid("the clustered selector needs the spatial grid"))?;
            let q = point
                .q
                .ok_or_else(|| Error::invalid("the clustered selector needs a cluster count"))?;
            let scores = randomized_ward_lasso(
                &xs,
                &yw,
                grid,
                &stability.to_config(point.lambda, seed).with_clusters(q),
                ClusterSource::Randomized,
            )?;
            Ok(scores.scores().clone())
        }
        Method::FTest => unreachable!(),
    }
}

/// One method's recovery record in one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub cluster_size: usize,
    pub smoothing: f64,
    pub method: Method,
    /// Parameters picked by cross-validation on the cell's tuning
    /// dataset; absent for the F test.
    pub selected: Option<ParamPoint>,
    pub auc_pr: Vec<f64>,
    pub auc_roc: Vec<f64>,
    pub mean_auc_pr: f64,
    pub std_auc_pr: f64,
    pub mean_auc_roc: f64,
    pub std_auc_roc: f64,
}

/// Winner of one (cluster size, smoothing) cell by mean ROC area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub cluster_size: usize,
    pub smoothing: f64,
    pub method: Method,
    pub mean_auc_roc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cluster_sizes: Vec<usize>,
    pub smoothings: Vec<f64>,
    pub methods: Vec<Method>,
    pub n_seeds: usize,
    /// Cells ordered by cluster size, then smoothing, then method.
    pub cells: Vec<SweepCell>,
    pub best: Vec<BestCell>,
}

impl SweepResult {
    pub fn cell(&self, cluster_size: usize, smoothing: f64, method: Method) -> Option<&SweepCell> {
        self.cells.iter().find(|c| {
            c.cluster_size == cluster_size && c.smoothing == smoothing && c.method == method
        })
    }
}

/// Recovery power over a grid of patch sizes and blur widths.
///
/// Each cell first tunes every method on one dedicated dataset, then
/// scores it on `n_seeds` fresh datasets shared by all methods; the
/// per-cell streams are derived from the template seed and the cell
/// coordinates alone.
pub fn sweep_experiment(
    template: &SimSpec,
    cluster_sizes: &[usize],
    smoothings: &[f64],
    methods: &[Method],
    n_seeds: usize,
    stability: &StabilityParams,
) -> Result<SweepResult> {
    if cluster_sizes.is_empty() || smoothings.is_empty() || methods.is_empty() {
        return Err(Error::invalid("sweep axes and method list must be non-empty"));
    }
    if n_seeds == 0 {
        return Err(Error::invalid("need at least one evaluation seed"));
    }
    let spatial = SpatialGrid::new(template.rows, template.cols)?;
    let mut coords = Vec::new();
    for &c in cluster_sizes {
        for &s in smoothings {
            let spec = template.with_cluster_size(c).with_smoothing(s);
            spec.validate()?;
            coords.push((c, s));
        }
    }

    let selections: Vec<Vec<Option<ParamPoint>>> =
        exec::try_map_indexed(coords.len(), |ci| -> Result<Vec<Option<ParamPoint>>> {
            let (c, s) = coords[ci];
            let cv_seed =
                seed::derive(template.seed, &[domain::SWEEP_CV, c as u64, s.to_bits()]);
            let spec = template.with_cluster_size(c).with_smoothing(s).with_seed(cv_seed);
            let (x, y, _) = crate::synthetic::generate_dataset(&spec)?;
            methods
                .iter()
                .map(|&m| {
                    if !m.has_parameters() {
                        return Ok(None);
                    }
                    let grid = default_param_grid(m, &x, &y, Some(&spatial))?;
                    let report =
                        cross_validate(m, &x, &y, Some(&spatial), &grid, DEFAULT_FOLDS, cv_seed)?;
                    Ok(Some(report.selected))
                })
                .collect()
        })?;

    let evals: Vec<Vec<(f64, f64)>> =
        exec::try_map_indexed(coords.len() * n_seeds, |u| -> Result<Vec<(f64, f64)>> {
            let ci = u / n_seeds;
            let s_idx = u % n_seeds;
            let (c, s) = coords[ci];
            let data_seed = seed::derive(
                template.seed,
                &[domain::SWEEP_EVAL, c as u64, s.to_bits(), s_idx as u64],
            );
            let spec = template.with_cluster_size(c).with_smoothing(s).with_seed(data_seed);
            let (x, y, truth) = crate::synthetic::generate_dataset(&spec)?;
            methods
                .iter()
                .enumerate()
                .map(|(mi, &m)| {
                    let fit_seed = seed::derive(
                        template.seed,
                        &[domain::METHOD_FIT, c as u64, s.to_bits(), s_idx as u64, m.tag()],
                    );
                    let scores = score_features(
                        m,
                        &x,
                        &y,
                        Some(&spatial),
                        selections[ci][mi].as_ref(),
                        stability,
                        fit_seed,
                    )?;
                    let curve = pr_and_roc(&scores.to_vec(), truth.support())?;
                    Ok((curve.auc_pr, curve.auc_roc))
                })
                .collect()
        })?;

    let mut cells: Vec<SweepCell> = Vec::with_capacity(coords.len() * methods.len());
    let mut best = Vec::with_capacity(coords.len());
    for (ci, &(c, s)) in coords.iter().enumerate() {
        let mut cell_best: Option<usize> = None;
        for (mi, &m) in methods.iter().enumerate() {
            let mut auc_pr = Vec::with_capacity(n_seeds);
            let mut auc_roc = Vec::with_capacity(n_seeds);
            for s_idx in 0..n_seeds {
                let (pr, roc) = evals[ci * n_seeds + s_idx][mi];
                auc_pr.push(pr);
                auc_roc.push(roc);
            }
            let (mean_auc_pr, std_auc_pr) = mean_std(&auc_pr);
            let (mean_auc_roc, std_auc_roc) = mean_std(&auc_roc);
            if cell_best.is_none_or(|b| {
                mean_auc_roc > cells[b].mean_auc_roc
            }) {
                cell_best = Some(cells.len());
            }
            cells.push(SweepCell {
                cluster_size: c,
                smoothing: s,
                method: m,
                selected: selections[ci][mi],
                auc_pr,
                auc_roc,
                mean_auc_pr,
                std_auc_pr,
                mean_auc_roc,
                std_auc_roc,
            });
        }
        let b = &cells[cell_best.unwrap()];
        best.push(BestCell {
            cluster_size: c,
            smoothing: s,
            method: b.method,
            mean_auc_roc: b.mean_auc_roc,
        });
    }
    Ok(SweepResult {
        cluster_sizes: cluster_sizes.to_vec(),
        smoothings: smoothings.to_vec(),
        methods: methods.to_vec(),
        n_seeds,
        cells,
        best,
    })
}

/// Long-format per-seed rows: `c,sigma,method,seed,auc_pr,auc_roc`.
pub fn write_sweep_csv(path: impl AsRef<Path>, result: &SweepResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "c,sigma,method,seed,auc_pr,auc_roc")?;
    for cell in &result.cells {
        for s in 0..result.n_seeds {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                cell.cluster_size,
                cell.smoothing,
                cell.method,
                s,
                cell.auc_pr[s],
                cell.auc_roc[s]
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Recovery of one clustering mode in the ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub source: ClusterSource,
    pub auc_pr: Vec<f64>,
    pub auc_roc: Vec<f64>,
    pub mean_auc_pr: f64,
    pub std_auc_pr: f64,
    pub mean_auc_roc: f64,
    pub std_auc_roc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub n_seeds: usize,
    pub lambda: f64,
    pub clusters: usize,
    pub arms: Vec<AblationArm>,
}

impl AblationResult {
    pub fn arm(&self, source: ClusterSource) -> &AblationArm {
        self.arms.iter().find(|a| a.source == source).unwrap()
    }
}

/// Runs the clustered selector under all three tree sources on shared
/// data.
///
/// For every seed index the three modes see the same dataset and the
/// same perturbation stream (`cfg.seed` is replaced by a derived
/// per-seed value), so differences come from the clustering alone.
pub fn ablation_experiment(
    spec: &SimSpec,
    cfg: &RandomizationConfig,
    n_seeds: usize,
) -> Result<AblationResult> {
    spec.validate()?;
    cfg.validate()?;
    let clusters = cfg
        .clusters
        .ok_or_else(|| Error::invalid("the ablation needs cfg.clusters"))?;
    if n_seeds == 0 {
        return Err(Error::invalid("need at least one seed"));
    }
    let spatial = SpatialGrid::new(spec.rows, spec.cols)?;
    let sources = [
        ClusterSource::Randomized,
        ClusterSource::FixedOnFullData,
        ClusterSource::RandomIidSignal,
    ];
    let per_seed: Vec<Vec<(f64, f64)>> =
        exec::try_map_indexed(n_seeds, |s| -> Result<Vec<(f64, f64)>> {
            let data_seed = seed::derive(spec.seed, &[domain::ABLATION_DATA, s as u64]);
            let (x, y, truth) = crate::synthetic::generate_dataset(&spec.with_seed(data_seed))?;
            let (xs, _) = standardize_columns(&x);
            let yw = working_target(&y);
            let fit_seed = seed::derive(spec.seed, &[domain::ABLATION_FIT, s as u64]);
            let run_cfg = cfg.with_seed(fit_seed);
            sources
                .iter()
                .map(|&source| {
                    let scores = randomized_ward_lasso(&xs, &yw, &spatial, &run_cfg, source)?;
                    let curve = pr_and_roc(&scores.scores().to_vec(), truth.support())?;
                    Ok((curve.auc_pr, curve.auc_roc))
                })
                .collect()
        })?;

    let arms = sources
        .iter()
        .enumerate()
        .map(|(i, &source)| {
            let auc_pr: Vec<f64> = per_seed.iter().map(|row| row[i].0).collect();
            let auc_roc: Vec<f64> = per_seed.iter().map(|row| row[i].1).collect();
            let (mean_auc_pr, std_auc_pr) = mean_std(&auc_pr);
            let (mean_auc_roc, std_auc_roc) = mean_std(&auc_roc);
            AblationArm {
                source,
                auc_pr,
                auc_roc,
                mean_auc_pr,
                std_auc_pr,
                mean_auc_roc,
                std_auc_roc,
            }
        })
        .collect();
    Ok(AblationResult { n_seeds, lambda: cfg.lambda, clusters, arms })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub m_grid: Vec<usize>,
    pub selected_m: usize,
    pub selected_lambda: f64,
    /// The winning top-`m` feature set, ascending.
    pub selected_features: Vec<usize>,
    /// Best mean cross-validated accuracy on the training rows.
    pub cv_accuracy: f64,
    /// Accuracy of the refit model on the held-out rows.
    pub test_accuracy: f64,
}

/// Trains an l2 logistic model on the top-scoring features and reports
/// held-out accuracy.
///
/// For every `m` in `m_grid` the `m` best-scored features (ties broken
/// toward lower indices) form a candidate design whose penalty path is
/// cross-validated on the training rows; the best (m, lambda) pair is
/// refit on all training rows and scored on the test rows. Score ties
/// prefer fewer features, then a smaller penalty.
pub fn prediction_validation(
    scores: &[f64],
    x_train: &DesignMatrix,
    y_train: &TargetVector,
    x_test: &DesignMatrix,
    y_test: &TargetVector,
    m_grid: &[usize],
    n_folds: usize,
    seed: u64,
) -> Result<PredictionReport> {
    let p = scores.len();
    if p != x_train.n_features() || p != x_test.n_features() {
        return Err(Error::shape(format!(
            "{p} scores for designs with {} and {} features",
            x_train.n_features(),
            x_test.n_features()
        )));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("score".into()));
    }
    if y_train.task() != Task::Classification || y_test.task() != Task::Classification {
        return Err(Error::invalid("prediction validation is a classification protocol"));
    }
    if x_train.n_samples() != y_train.len() || x_test.n_samples() != y_test.len() {
        return Err(Error::shape("design and target row counts differ"));
    }
    if m_grid.is_empty() {
        return Err(Error::invalid("empty feature-count grid"));
    }
    for &m in m_grid {
        if m == 0 || m > p {
            return Err(Error::invalid(format!(
                "feature count {m} out of range for {p} features"
            )));
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let assignment = fold_assignments(y_train, n_folds, seed)?;

    let mut best: Option<(f64, usize, f64, Vec<usize>)> = None;
    for &m in m_grid {
        let mut top = order[..m].to_vec();
        top.sort_unstable();
        let xm = DesignMatrix::new_unchecked(x_train.values().select(Axis(1), &top));
        let (xm_std, _) = standardize_columns(&xm);
        let lmax = lambda_max(&xm_std, y_train)?;
        let lambdas = lambda_path(lmax, LAMBDA_PATH_POINTS, LAMBDA_PATH_RATIO)?;
        let means = cv_l2_accuracy(&xm, y_train, &lambdas, &assignment, n_folds)?;
        for (li, &lambda) in lambdas.iter().enumerate() {
            let better = match &best {
                None => true,
                Some((score, bm, bl, _)) => {
                    means[li] > *score
                        || (means[li] == *score && (m < *bm || (m == *bm && lambda < *bl)))
                }
            };
            if better {
                best = Some((means[li], m, lambda, top.clone()));
            }
        }
    }
    let (cv_accuracy, selected_m, selected_lambda, selected_features) = best.unwrap();

    let xm_train = DesignMatrix::new_unchecked(x_train.values().select(Axis(1), &selected_features));
    let xm_test = DesignMatrix::new_unchecked(x_test.values().select(Axis(1), &selected_features));
    let (xs, stdz) = standardize_columns(&xm_train);
    let xt = stdz.apply(&xm_test)?;
    let problem = LogisticProblem::new(xs.values().view(), y_train.values().view());
    let fit = problem.fit(selected_lambda, Penalty::L2, FIT_TOL, FIT_MAX_ITER, None);
    let test_accuracy =
        label_accuracy(xt.values(), &fit.beta, fit.intercept, &y_test.values().to_vec())?;
    Ok(PredictionReport {
        m_grid: m_grid.to_vec(),
        selected_m,
        selected_lambda,
        selected_features,
        cv_accuracy,
        test_accuracy,
    })
}

fn cv_l2_accuracy(
    x: &DesignMatrix,
    y: &TargetVector,
    lambdas: &[f64],
    assignment: &[usize],
    n_folds: usize,
) -> Result<Vec<f64>> {
    let fold_scores = exec::try_map_indexed(n_folds, |f| -> Result<Vec<f64>> {
        let train: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == f).collect();
        let x_train = DesignMatrix::new_unchecked(x.values().select(Axis(0), &train));
        let x_test = DesignMatrix::new_unchecked(x.values().select(Axis(0), &test));
        let y_train: Array1<f64> = train.iter().map(|&i| y.values()[i]).collect();
        let y_test: Vec<f64> = test.iter().map(|&i| y.values()[i]).collect();
        let (xs, stdz) = standardize_columns(&x_train);
        let xt = stdz.apply(&x_test)?;
        let problem = LogisticProblem::new(xs.values().view(), y_train.view());
        let mut warm: Option<(Array1<f64>, f64)> = None;
        let mut out = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            let fit = problem.fit(
                lambda,
                Penalty::L2,
                FIT_TOL,
                FIT_MAX_ITER,
                warm.as_ref().map(|(b, b0)| (b, *b0)),
            );
            out.push(label_accuracy(xt.values(), &fit.beta, fit.intercept, &y_test)?);
            warm = Some((fit.beta, fit.intercept));
        }
        Ok(out)
    })?;
    let mut means = vec![0.0; lambdas.len()];
    for fold in &fold_scores {
        for (m, s) in means.iter_mut().zip(fold) {
            *m += s;
        }
    }
    for m in &mut means {
        *m /= n_folds as f64;
    }
    Ok(means)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
