mod manifest;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wardsel::io;
use wardsel::{
    binarize_target, cross_validate, default_param_grid, generate_dataset, pr_and_roc,
    score_features, sweep_experiment, write_sweep_csv, Method, ParamPoint, SimSpec, SpatialGrid,
    StabilityParams, Task,
};

#[derive(Parser)]
#[command(name = "wardsel", version, about = "feature selection on spatially structured designs")]
struct Cli {
    /// worker threads (default: all cores); results do not depend on this
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset and write it to a directory
    Simulate(SimulateArgs),
    /// Score the features of a dataset with one method
    Fit(FitArgs),
    /// Run the cluster-size by smoothing sweep over several methods
    Sweep(SweepArgs),
    /// Compare a scores file against a known support
    Eval(EvalArgs),
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// samples
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// active features
    #[arg(long, default_value_t = 64)]
    k: usize,
    /// active patch size; must divide k
    #[arg(long, default_value_t = 16)]
    c: usize,
    /// smoothing kernel width, 0 disables
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 32)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    cols: usize,
    /// smallest active weight magnitude
    #[arg(long, default_value_t = 0.2)]
    beta_min: f64,
    /// explained variance of the noisy response
    #[arg(long, default_value_t = 0.8)]
    evr: f64,
    /// cut the response at its median into -1/+1 labels
    #[arg(long)]
    binarize: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// f-test, lasso, enet, randomized-lasso or randomized-ward-lasso
    method: String,
    /// design matrix, .bin or samples .csv
    #[arg(long)]
    x: PathBuf,
    /// target csv; defaults to the y column of --x when present
    #[arg(long)]
    y: Option<PathBuf>,
    /// square or logistic
    #[arg(long, default_value = "square")]
    loss: String,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// cluster count for randomized-ward-lasso
    #[arg(long)]
    q: Option<usize>,
    /// randomized repetitions
    #[arg(long, default_value_t = 200)]
    l: usize,
    /// column rescale strength
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// row subsample fraction
    #[arg(long, default_value_t = 0.75)]
    pi: f64,
    /// pick the parameter point by cross-validation instead of flags
    #[arg(long)]
    cv: bool,
    /// image rows; required with --cols for randomized-ward-lasso
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    /// cluster sizes, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    c: Vec<usize>,
    /// smoothing widths, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    sigma: Vec<f64>,
    /// methods, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    /// evaluation datasets per cell
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    k: usize,
    #[arg(long, default_value_t = 32)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    cols: usize,
    #[arg(long, default_value_t = 0.2)]
    beta_min: f64,
    #[arg(long, default_value_t = 0.8)]
    evr: f64,
    /// randomized repetitions
    #[arg(long, default_value_t = 200)]
    l: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.75)]
    pi: f64,
    /// also render the heatmap panels to this file
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("worker pool already configured")?;
    }
    match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Fit(args) => run_fit(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Eval(args) => run_eval(args),
    }
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let spec = SimSpec {
        rows: args.rows,
        cols: args.cols,
        n_samples: args.n,
        support_size: args.k,
        cluster_size: args.c,
        smoothing: args.sigma,
        beta_min: args.beta_min,
        explained_variance: args.evr,
        seed: args.seed,
    };
    let (x, y, truth) = generate_dataset(&spec)?;
    let y = if args.binarize { binarize_target(&y)? } else { y };

    fs::create_dir_all(&args.out)?;
    let outputs = vec![
        args.out.join("design.bin"),
        args.out.join("target.csv"),
        args.out.join("weights.csv"),
        args.out.join("support.csv"),
        args.out.join("spec.json"),
    ];
    io::write_design_bin(&outputs[0], &x)?;
    io::write_target_csv(&outputs[1], &y)?;
    io::write_weights_csv(&outputs[2], truth.weights())?;
    io::write_support_csv(&outputs[3], truth.support())?;
    io::write_json(&outputs[4], &spec)?;
    manifest::write(
        &args.out,
        "simulate",
        serde_json::to_value(&args)?,
        Some(args.seed),
        &[],
        &outputs,
        start.elapsed(),
    )?;
    println!(
        "simulated {} samples x {} features into {}",
        x.n_samples(),
        x.n_features(),
        args.out.display()
    );
    Ok(())
}

fn run_fit(args: FitArgs) -> Result<()> {
    let start = Instant::now();
    let method: Method = args.method.parse()?;
    let task = match args.loss.as_str() {
        "square" => Task::Regression,
        "logistic" => Task::Classification,
        other => bail!("unknown loss {other:?}; expected square or logistic"),
    };

    let (x, y_embedded) = if args.x.extension().is_some_and(|e| e == "bin") {
        (io::read_design_bin(&args.x)?, None)
    } else {
        io::read_samples_csv(&args.x, task)?
    };
    let y = match &args.y {
        Some(path) => io::read_target_csv(path, task)?,
        None => y_embedded.context("no target: pass --y or include a y column in --x")?,
    };

    let spatial = match (args.rows, args.cols) {
        (Some(r), Some(c)) => Some(SpatialGrid::new(r, c)?),
        (None, None) => None,
        _ => bail!("pass --rows and --cols together"),
    };
    if let Some(grid) = &spatial {
        if grid.node_count() != x.n_features() {
            bail!(
                "--rows x --cols is {} but the design has {} features",
                grid.node_count(),
                x.n_features()
            );
        }
    }
    if method.needs_spatial() && spatial.is_none() {
        bail!("{method} needs --rows and --cols");
    }

    let stability = StabilityParams {
        alpha: args.alpha,
        subsample_fraction: args.pi,
        repetitions: args.l,
    };
    let mut cv_report = None;
    let point = if args.cv {
        if !method.has_parameters() {
            bail!("{method} has nothing to cross-validate");
        }
        let grid = default_param_grid(method, &x, &y, spatial.as_ref())?;
        let report = cross_validate(
            method,
            &x,
            &y,
            spatial.as_ref(),
            &grid,
            wardsel::crossval::DEFAULT_FOLDS,
            args.seed,
        )?;
        let selected = report.selected;
        cv_report = Some(report);
        Some(selected)
    } else if method.has_parameters() {
        let lambda = args.lambda.context("pass --lambda or use --cv")?;
        Some(ParamPoint { lambda, rho: args.rho, q: args.q })
    } else {
        if args.lambda.is_some() || args.rho.is_some() || args.q.is_some() {
            bail!("{method} takes no hyperparameters");
        }
        None
    };

    let scores = score_features(
        method,
        &x,
        &y,
        spatial.as_ref(),
        point.as_ref(),
        &stability,
        args.seed,
    )?;

    fs::create_dir_all(&args.out)?;
    let mut outputs = vec![args.out.join("scores.csv")];
    io::write_scores_csv(&outputs[0], scores.as_slice().unwrap())?;
    if let Some(grid) = &spatial {
        let pgm = args.out.join("scores.pgm");
        io::write_scores_pgm(&pgm, scores.as_slice().unwrap(), grid.rows(), grid.cols())?;
        outputs.push(pgm);
    }
    if let Some(report) = &cv_report {
        let path = args.out.join("cv_report.json");
        io::write_json(&path, report)?;
        outputs.push(path);
    }

    let mut inputs = vec![args.x.clone()];
    if let Some(y_path) = &args.y {
        inputs.push(y_path.clone());
    }
    manifest::write(
        &args.out,
        "fit",
        serde_json::to_value(&args)?,
        Some(args.seed),
        &inputs,
        &outputs,
        start.elapsed(),
    )?;
    match point {
        Some(p) => println!(
            "scored {} features with {method} at lambda={:?}{}{}",
            scores.len(),
            p.lambda,
            p.rho.map_or(String::new(), |r| format!(" rho={r:?}")),
            p.q.map_or(String::new(), |q| format!(" q={q}")),
        ),
        None => println!("scored {} features with {method}", scores.len()),
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let start = Instant::now();
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<wardsel::Result<Vec<_>>>()?;
    let template = SimSpec {
        rows: args.rows,
        cols: args.cols,
        n_samples: args.n,
        support_size: args.k,
        cluster_size: args.c[0],
        smoothing: args.sigma[0],
        beta_min: args.beta_min,
        explained_variance: args.evr,
        seed: args.seed,
    };
    let stability = StabilityParams {
        alpha: args.alpha,
        subsample_fraction: args.pi,
        repetitions: args.l,
    };
    let result = sweep_experiment(&template, &args.c, &args.sigma, &methods, args.seeds, &stability)?;

    fs::create_dir_all(&args.out)?;
    let mut outputs = vec![args.out.join("sweep.csv"), args.out.join("sweep.json")];
    write_sweep_csv(&outputs[0], &result)?;
    io::write_json(&outputs[1], &result)?;
    if let Some(svg_path) = &args.svg {
        fs::write(svg_path, svg::render_sweep(&result))?;
        outputs.push(svg_path.clone());
    }
    manifest::write(
        &args.out,
        "sweep",
        serde_json::to_value(&args)?,
        Some(args.seed),
        &[],
        &outputs,
        start.elapsed(),
    )?;
    for best in &result.best {
        println!(
            "c={} sigma={}: best {} (mean roc auc {:.3})",
            best.cluster_size, best.smoothing, best.method, best.mean_auc_roc
        );
    }
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let start = Instant::now();
    let scores = io::read_scores_csv(&args.scores)?;
    let truth = io::read_support_csv(&args.truth)?;
    let curve = pr_and_roc(&scores, &truth)?;

    fs::create_dir_all(&args.out)?;
    let eval_path = args.out.join("eval.json");
    io::write_json(&eval_path, &curve)?;
    manifest::write(
        &args.out,
        "eval",
        serde_json::to_value(&args)?,
        None,
        &[args.scores.clone(), args.truth.clone()],
        std::slice::from_ref(&eval_path),
        start.elapsed(),
    )?;
    println!("auc_pr={:?}", curve.auc_pr);
    println!("auc_roc={:?}", curve.auc_roc);
    Ok(())
}
