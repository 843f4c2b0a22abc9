//! Sparse linear solvers.
//!
//! Square loss fits minimize
//!
//! ```text
//! (1/2n) * ||y - X b||^2  +  lambda * ( rho * ||b||_1  +  (1 - rho)/2 * ||b||_2^2 )
//! ```
//!
//! by cyclic coordinate descent with an incrementally maintained
//! residual. `rho = 1` is the lasso. No intercept is fitted; callers
//! are expected to pass standardized columns and a centered target.
//!
//! Logistic fits minimize `(1/n) * sum log(1 + exp(-y_i eta_i))` plus an
//! l1 or l2 penalty on the weights, with `eta = X b + b0` and an
//! unpenalized intercept `b0`. The solver forms the usual quadratic
//! local model around the current margins and solves it by penalized
//! coordinate descent, repeating until the true optimality conditions
//! hold.
//!
//! A fit reports convergence only after both its stopping rule and an
//! explicit optimality check pass: coefficient updates within a sweep
//! settled below `tol`, and the subgradient residual (see
//! [`kkt_residual`]) recomputed from a fresh residual is at most `tol`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{CoefVector, DesignMatrix, Task, TargetVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Overall penalty strength, must be positive.
    pub lambda: f64,
    /// l1 fraction of the square-loss penalty, in `[0, 1]`.
    pub rho: f64,
    /// Stopping tolerance for coefficient updates and the optimality
    /// residual.
    pub tol: f64,
    /// Sweep budget (outer iterations for logistic fits).
    pub max_iter: usize,
}

impl SolverConfig {
    pub fn new(lambda: f64) -> Self {
        SolverConfig { lambda, rho: 1.0, tol: 1e-6, max_iter: 1000 }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.rho) || !self.rho.is_finite() {
            return Err(Error::invalid(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub coef: CoefVector,
    /// False when the iteration budget ran out before the optimality
    /// check passed.
    pub converged: bool,
    pub iterations: usize,
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_pair(x: &DesignMatrix, y: &TargetVector, task: Task) -> Result<()> {
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    if y.task() != task {
        return Err(Error::invalid(format!(
            "expected a {:?} target, got {:?}",
            task,
            y.task()
        )));
    }
    Ok(())
}

/// Columns of `x` stored contiguously, shared across fits on the same
/// data (for example along a regularization path).
pub(crate) struct EnetProblem {
    xt: Array2<f64>,
    y: Array1<f64>,
    col_sq: Array1<f64>,
}

pub(crate) struct RawFit {
    pub beta: Array1<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl EnetProblem {
    pub fn new(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Self {
        let n = x.nrows() as f64;
        let xt = x.t().as_standard_layout().into_owned();
        let col_sq = xt.rows().into_iter().map(|c| c.dot(&c) / n).collect();
        EnetProblem { xt, y: y.to_owned(), col_sq }
    }

    pub fn fit(
        &self,
        lambda: f64,
        rho: f64,
        tol: f64,
        max_iter: usize,
        warm: Option<&Array1<f64>>,
    ) -> RawFit {
        let p = self.xt.nrows();
        let n = self.y.len() as f64;
        let l1 = lambda * rho;
        let l2 = lambda * (1.0 - rho);
        let mut beta = match warm {
            Some(b) => b.clone(),
            None => Array1::zeros(p),
        };
        let mut r = self.fresh_residual(&beta);
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < max_iter {
            sweeps += 1;
            let mut max_delta = 0.0f64;
            for j in 0..p {
                let xj = self.xt.row(j);
                let sj = self.col_sq[j];
                let denom = sj + l2;
                let old = beta[j];
                let new = if denom > 0.0 {
                    let zj = xj.dot(&r) / n + sj * old;
                    soft(zj, l1) / denom
                } else {
                    0.0
                };
                if new != old {
                    let delta = new - old;
                    beta[j] = new;
                    r.scaled_add(-delta, &xj);
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if max_delta <= tol {
                r = self.fresh_residual(&beta);
                if self.kkt(&beta, &r, lambda, rho) <= tol {
                    converged = true;
                    break;
                }
            }
        }
        RawFit { beta, converged, iterations: sweeps }
    }

    fn fresh_residual(&self, beta: &Array1<f64>) -> Array1<f64> {
        let mut r = self.y.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                r.scaled_add(-b, &self.xt.row(j));
            }
        }
        r
    }

    fn kkt(&self, beta: &Array1<f64>, r: &Array1<f64>, lambda: f64, rho: f64) -> f64 {
        let n = self.y.len() as f64;
        let l1 = lambda * rho;
        let l2 = lambda * (1.0 - rho);
        let mut worst = 0.0f64;
        for j in 0..self.xt.nrows() {
            let g = self.xt.row(j).dot(r) / n - l2 * beta[j];
            let resid = if beta[j] == 0.0 {
                (g.abs() - l1).max(0.0)
            } else {
                (g - l1 * beta[j].signum()).abs()
            };
            worst = worst.max(resid);
        }
        worst
    }
}

/// Lasso by coordinate descent. Requires `cfg.rho == 1`.
pub fn lasso_cd(x: &DesignMatrix, y: &TargetVector, cfg: &SolverConfig) -> Result<FitOutcome> {
    if cfg.rho != 1.0 {
        return Err(Error::invalid(format!("lasso requires rho = 1, got {}", cfg.rho)));
    }
    enet_cd(x, y, cfg)
}

/// Elastic net by coordinate descent, square loss.
pub fn enet_cd(x: &DesignMatrix, y: &TargetVector, cfg: &SolverConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    check_pair(x, y, Task::Regression)?;
    let problem = EnetProblem::new(x.values().view(), y.values().view());
    let fit = problem.fit(cfg.lambda, cfg.rho, cfg.tol, cfg.max_iter, None);
    Ok(FitOutcome {
        coef: CoefVector::new(fit.beta, 0.0)?,
        converged: fit.converged,
        iterations: fit.iterations,
    })
}

/// Subgradient optimality residual of `coef` for the square-loss
/// objective. Zero (up to tolerance) certifies a minimizer.
///
/// With `g_j = x_j' (y - X b) / n - lambda (1 - rho) b_j`, the residual
/// at coordinate `j` is `max(0, |g_j| - lambda rho)` when `b_j = 0` and
/// `|g_j - lambda rho sign(b_j)|` otherwise; the result is the maximum
/// over coordinates.
pub fn kkt_residual(
    x: &DesignMatrix,
    y: &TargetVector,
    coef: &CoefVector,
    lambda: f64,
    rho: f64,
) -> Result<f64> {
    check_pair(x, y, Task::Regression)?;
    if coef.len() != x.n_features() {
        return Err(Error::shape(format!(
            "{} coefficients for {} features",
            coef.len(),
            x.n_features()
        )));
    }
    let problem = EnetProblem::new(x.values().view(), y.values().view());
    let r = problem.fresh_residual(coef.values());
    Ok(problem.kkt(coef.values(), &r, lambda, rho))
}

/// Square-loss elastic net objective value at `beta`.
pub fn enet_objective(
    x: &DesignMatrix,
    y: &TargetVector,
    beta: &Array1<f64>,
    lambda: f64,
    rho: f64,
) -> f64 {
    let n = x.n_samples() as f64;
    let r = y.values() - &x.values().dot(beta);
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    r.dot(&r) / (2.0 * n) + lambda * (rho * l1 + 0.5 * (1.0 - rho) * l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    L1,
    L2,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log1p_exp(z: f64) -> f64 {
    // ln(1 + e^z), stable at both tails
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

const MU_CLIP: f64 = 1e-7;

pub(crate) struct LogisticProblem {
    xt: Array2<f64>,
    y: Array1<f64>,
}

pub(crate) struct LogisticRawFit {
    pub beta: Array1<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LogisticProblem {
    pub fn new(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Self {
        let xt = x.t().as_standard_layout().into_owned();
        LogisticProblem { xt, y: y.to_owned() }
    }

    pub fn fit(
        &self,
        lambda: f64,
        penalty: Penalty,
        tol: f64,
        max_outer: usize,
        warm: Option<(&Array1<f64>, f64)>,
    ) -> LogisticRawFit {
        let p = self.xt.nrows();
        let n = self.y.len();
        let nf = n as f64;
        let (mut beta, mut intercept) = match warm {
            Some((b, b0)) => (b.clone(), b0),
            None => (Array1::zeros(p), 0.0),
        };
        let mut eta = Array1::from_elem(n, intercept);
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                eta.scaled_add(b, &self.xt.row(j));
            }
        }
        let mut w = Array1::zeros(n);
        let mut r = Array1::zeros(n);
        let mut converged = false;
        let mut outer = 0;
        let inner_cap = 100;
        while outer < max_outer {
            outer += 1;
            // quadratic local model around the current margins
            for i in 0..n {
                let mu = sigmoid(eta[i]).clamp(MU_CLIP, 1.0 - MU_CLIP);
                let t = (self.y[i] + 1.0) / 2.0;
                w[i] = mu * (1.0 - mu);
                r[i] = (t - mu) / w[i];
            }
            let col_sq: Vec<f64> = (0..p)
                .map(|j| {
                    let xj = self.xt.row(j);
                    xj.iter().zip(w.iter()).map(|(&x, &wi)| wi * x * x).sum::<f64>() / nf
                })
                .collect();
            let w_mean = w.sum() / nf;
            for _ in 0..inner_cap {
                let mut max_delta = 0.0f64;
                for j in 0..p {
                    let sj = col_sq[j];
                    let old = beta[j];
                    let xj = self.xt.row(j);
                    let new = match penalty {
                        Penalty::L1 => {
                            if sj > 0.0 {
                                let zj = weighted_dot(&xj, &w, &r) / nf + sj * old;
                                soft(zj, lambda) / sj
                            } else {
                                0.0
                            }
                        }
                        Penalty::L2 => {
                            let zj = weighted_dot(&xj, &w, &r) / nf + sj * old;
                            zj / (sj + lambda)
                        }
                    };
                    if new != old {
                        let delta = new - old;
                        beta[j] = new;
                        for i in 0..n {
                            r[i] -= delta * xj[i];
                            eta[i] += delta * xj[i];
                        }
                        max_delta = max_delta.max(delta.abs());
                    }
                }
                let db = w.iter().zip(r.iter()).map(|(&wi, &ri)| wi * ri).sum::<f64>()
                    / (nf * w_mean);
                if db != 0.0 {
                    intercept += db;
                    for i in 0..n {
                        r[i] -= db;
                        eta[i] += db;
                    }
                    max_delta = max_delta.max(db.abs());
                }
                if max_delta <= tol {
                    break;
                }
            }
            let (resid, _) = self.optimality(&beta, &eta, lambda, penalty);
            if resid <= tol {
                converged = true;
                break;
            }
        }
        LogisticRawFit { beta, intercept, converged, iterations: outer }
    }

    /// Max-norm optimality residual and the raw loss gradient.
    fn optimality(
        &self,
        beta: &Array1<f64>,
        eta: &Array1<f64>,
        lambda: f64,
        penalty: Penalty,
    ) -> (f64, Array1<f64>) {
        let n = self.y.len();
        let nf = n as f64;
        let mut slack = Array1::zeros(n);
        for i in 0..n {
            slack[i] = self.y[i] * sigmoid(-self.y[i] * eta[i]);
        }
        let p = self.xt.nrows();
        let mut grad = Array1::zeros(p);
        let mut worst = (slack.sum() / nf).abs();
        for j in 0..p {
            let g = -self.xt.row(j).dot(&slack) / nf;
            grad[j] = g;
            let resid = match penalty {
                Penalty::L1 => {
                    if beta[j] == 0.0 {
                        (g.abs() - lambda).max(0.0)
                    } else {
                        (g + lambda * beta[j].signum()).abs()
                    }
                }
                Penalty::L2 => (g + lambda * beta[j]).abs(),
            };
            worst = worst.max(resid);
        }
        (worst, grad)
    }
}

fn weighted_dot(x: &ndarray::ArrayView1<f64>, w: &Array1<f64>, r: &Array1<f64>) -> f64 {
    let mut acc = 0.0;
    for ((xv, wv), rv) in x.iter().zip(w.iter()).zip(r.iter()) {
        acc += xv * wv * rv;
    }
    acc
}

fn logistic_fit(
    x: &DesignMatrix,
    y: &TargetVector,
    cfg: &SolverConfig,
    penalty: Penalty,
) -> Result<FitOutcome> {
    cfg.validate()?;
    check_pair(x, y, Task::Classification)?;
    let problem = LogisticProblem::new(x.values().view(), y.values().view());
    let fit = problem.fit(cfg.lambda, penalty, cfg.tol, cfg.max_iter, None);
    Ok(FitOutcome {
        coef: CoefVector::new(fit.beta, fit.intercept)?,
        converged: fit.converged,
        iterations: fit.iterations,
    })
}

/// l1-penalized logistic regression with unpenalized intercept.
/// `cfg.rho` is ignored; `cfg.lambda` multiplies `||b||_1`.
pub fn logistic_l1(x: &DesignMatrix, y: &TargetVector, cfg: &SolverConfig) -> Result<FitOutcome> {
    logistic_fit(x, y, cfg, Penalty::L1)
}

/// l2-penalized logistic regression with unpenalized intercept; the
/// term added to the mean log-loss is `lambda/2 * ||b||^2`.
pub fn logistic_l2(x: &DesignMatrix, y: &TargetVector, cfg: &SolverConfig) -> Result<FitOutcome> {
    logistic_fit(x, y, cfg, Penalty::L2)
}

/// Mean logistic loss `(1/n) sum log(1 + exp(-y eta))` at `coef`, no
/// penalty term.
pub fn logistic_loss(x: &DesignMatrix, y: &TargetVector, coef: &CoefVector) -> Result<f64> {
    check_pair(x, y, Task::Classification)?;
    let eta = x.values().dot(coef.values()) + coef.intercept();
    let n = y.len() as f64;
    Ok(y.values()
        .iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| log1p_exp(-yi * e))
        .sum::<f64>()
        / n)
}

/// Gradient of [`logistic_loss`] with respect to the weights and the
/// intercept.
pub fn logistic_loss_gradient(
    x: &DesignMatrix,
    y: &TargetVector,
    coef: &CoefVector,
) -> Result<(Array1<f64>, f64)> {
    check_pair(x, y, Task::Classification)?;
    let n = y.len() as f64;
    let eta = x.values().dot(coef.values()) + coef.intercept();
    let slack: Array1<f64> = y
        .values()
        .iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| yi * sigmoid(-yi * e))
        .collect();
    let grad = -x.values().t().dot(&slack) / n;
    let grad_b = -slack.sum() / n;
    Ok((grad, grad_b))
}

/// Optimality residual for a penalized logistic fit, including the
/// intercept gradient.
pub fn logistic_kkt_residual(
    x: &DesignMatrix,
    y: &TargetVector,
    coef: &CoefVector,
    lambda: f64,
    penalty: Penalty,
) -> Result<f64> {
    check_pair(x, y, Task::Classification)?;
    let problem = LogisticProblem::new(x.values().view(), y.values().view());
    let eta = x.values().dot(coef.values()) + coef.intercept();
    let (resid, _) = problem.optimality(coef.values(), &eta, lambda, penalty);
    Ok(resid)
}

/// Smallest penalty at which the fit is fully sparse.
///
/// Square loss: `max_j |x_j' y| / n` for the all-zero solution.
/// Logistic loss: the max absolute weight-gradient coordinate at the
/// null model, whose intercept is the empirical log odds.
pub fn lambda_max(x: &DesignMatrix, y: &TargetVector) -> Result<f64> {
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    let n = y.len() as f64;
    match y.task() {
        Task::Regression => {
            let g = x.values().t().dot(y.values());
            Ok(g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / n)
        }
        Task::Classification => {
            let pos = y.values().iter().filter(|&&v| v == 1.0).count() as f64;
            let b0 = (pos / (n - pos)).ln();
            let slack: Array1<f64> = y
                .values()
                .iter()
                .map(|&yi| yi * sigmoid(-yi * b0))
                .collect();
            let g = x.values().t().dot(&slack);
            Ok(g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / n)
        }
    }
}

const F_CAP: f64 = 1e12;

/// Per-feature univariate screening scores.
///
/// Regression targets get the squared-correlation F statistic
/// `(n - 2) r^2 / (1 - r^2)`; classification targets get the two-group
/// one-way analysis-of-variance F. Zero-variance features score 0, and
/// perfect associations are capped at `1e12`.
pub fn univariate_f_scores(x: &DesignMatrix, y: &TargetVector) -> Result<Array1<f64>> {
    if x.n_samples() != y.len() {
        return Err(Error::shape(format!(
            "{} samples but {} targets",
            x.n_samples(),
            y.len()
        )));
    }
    let n = x.n_samples();
    if n < 3 {
        return Err(Error::invalid("F scores need at least 3 samples"));
    }
    let nf = n as f64;
    let dof = nf - 2.0;
    match y.task() {
        Task::Regression => {
            let yv = y.values();
            let ym = yv.sum() / nf;
            let yc: Array1<f64> = yv.iter().map(|&v| v - ym).collect();
            let ss_y = yc.dot(&yc);
            let mut out = Array1::zeros(x.n_features());
            if ss_y == 0.0 {
                return Ok(out);
            }
            for (j, col) in x.values().columns().into_iter().enumerate() {
                let xm = col.sum() / nf;
                let mut sxx = 0.0;
                let mut sxy = 0.0;
                for (&xv, &ycv) in col.iter().zip(yc.iter()) {
                    let xc = xv - xm;
                    sxx += xc * xc;
                    sxy += xc * ycv;
                }
                if sxx == 0.0 {
                    continue;
                }
                let r2 = (sxy * sxy / (sxx * ss_y)).min(1.0);
                out[j] = if 1.0 - r2 <= 1e-12 { F_CAP } else { dof * r2 / (1.0 - r2) };
            }
            Ok(out)
        }
        Task::Classification => {
            let yv = y.values();
            let mut out = Array1::zeros(x.n_features());
            for (j, col) in x.values().columns().into_iter().enumerate() {
                let mut sums = [0.0f64; 2];
                let mut counts = [0.0f64; 2];
                for (&xv, &yi) in col.iter().zip(yv.iter()) {
                    let g = usize::from(yi == 1.0);
                    sums[g] += xv;
                    counts[g] += 1.0;
                }
                let grand = (sums[0] + sums[1]) / nf;
                let means = [sums[0] / counts[0], sums[1] / counts[1]];
                let ssb = counts[0] * (means[0] - grand).powi(2)
                    + counts[1] * (means[1] - grand).powi(2);
                let mut ssw = 0.0;
                for (&xv, &yi) in col.iter().zip(yv.iter()) {
                    let g = usize::from(yi == 1.0);
                    ssw += (xv - means[g]).powi(2);
                }
                out[j] = if ssw <= 1e-300 {
                    if ssb > 0.0 {
                        F_CAP
                    } else {
                        0.0
                    }
                } else {
                    ssb * dof / ssw
                };
            }
            Ok(out)
        }
    }
}
