//! Feature selection on spatially structured designs.
//!
//! The centerpiece is a stability-selection loop for designs whose
//! features live on a pixel grid and carry strong local correlation:
//! each repetition subsamples the rows, randomly rescales the columns,
//! clusters the perturbed features into connected patches by
//! grid-constrained Ward agglomeration, fits a sparse model on the
//! patch averages, and projects the support back to pixels. Features
//! are ranked by how often repetitions select them.
//!
//! Around that live the pieces needed to run and judge it end to end:
//! coordinate-descent lasso / elastic net and penalized logistic
//! solvers, a synthetic benchmark with smoothed designs and patchy
//! ground truth, precision-recall / ROC scoring against known
//! supports, cross-validation for parameter choice, and the sweep and
//! ablation drivers behind the command-line tool.
//!
//! Everything that consumes randomness takes a seed and derives one
//! independent ChaCha stream per repetition, so results are identical
//! run to run and independent of the thread count; the `parallel`
//! feature (on by default) only changes how repetitions are scheduled.

pub mod crossval;
pub mod data;
pub mod error;
mod exec;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod randomize;
mod seed;
pub mod solvers;
pub mod synthetic;
pub mod ward;

pub use crossval::{
    cross_validate, default_param_grid, fold_assignments, lambda_path, CvReport, Method,
    ParamPoint,
};
pub use data::{
    backproject, reduce_by_partition, standardize_columns, CoefVector, DesignMatrix,
    GroundTruth, StabilityScores, Standardization, TargetVector, Task,
};
pub use error::{Error, Result};
pub use experiment::{
    ablation_experiment, prediction_validation, score_features, sweep_experiment,
    write_sweep_csv, AblationArm, AblationResult, BestCell, PredictionReport, StabilityParams,
    SweepCell, SweepResult,
};
pub use grid::{Partition, SpatialGrid};
pub use metrics::{accuracy, explained_variance, pr_and_roc, PrCurve};
pub use randomize::{
    random_rescale, randomized_lasso, randomized_ward_lasso, stability_support, subsample,
    ClusterSource, RandomizationConfig,
};
pub use solvers::{
    enet_cd, lambda_max, lasso_cd, logistic_l1, logistic_l2, univariate_f_scores,
    FitOutcome, SolverConfig,
};
pub use synthetic::{
    binarize_target, gaussian_smooth_2d, generate_dataset, make_weights, nmin_estimate,
    SimSpec,
};
pub use ward::{cut_tree, ward_cluster, Merge, MergeTree};
