//! Command-line front end: `generate` builds a pool of base clusterings,
//! `ensemble` runs the refinement pipeline, `sweep` repeats it over a
//! parameter grid.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tensemble::basegen::{generate_pool, DataMatrix, PoolConfig};
use tensemble::ensemble::LabelMatrix;
use tensemble::solver::LtaConfig;
use tensemble::tensor::Orientation;

/// Command-line face of [`Orientation`].
#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum OrientArg {
    Lateral,
    Frontal,
}

impl From<OrientArg> for Orientation {
    fn from(arg: OrientArg) -> Self {
        match arg {
            OrientArg::Lateral => Orientation::Lateral,
            OrientArg::Frontal => Orientation::Frontal,
        }
    }
}

use tensemble_cli::pipeline::{
    render_summary_table, run_ensemble, run_sweep, Backend, EnsembleOptions, SourcePaths, SweepGrid,
};
use tensemble_cli::{io, CliError, CliResult};

#[derive(Parser)]
#[command(name = "tensemble", version, about = "Clustering-ensemble refinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a pool of base clusterings from a feature CSV.
    Generate(GenerateArgs),
    /// Refine an ensemble and score the consensus against ground truth.
    Ensemble(EnsembleArgs),
    /// Run the ensemble over a grid of lambda or m values.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Feature CSV, one sample per row.
    #[arg(long)]
    data: PathBuf,
    /// Treat the last column as ground-truth labels.
    #[arg(long)]
    truth_last_column: bool,
    /// Standardize features to zero mean and unit variance first.
    #[arg(long)]
    zscore: bool,
    /// Clusterings to generate.
    #[arg(long, default_value_t = 100)]
    pool_size: usize,
    /// Smallest cluster count drawn.
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    /// Largest cluster count drawn (default: floor of sqrt(n)).
    #[arg(long)]
    k_max: Option<usize>,
    /// Iteration cap for the per-clustering k-means.
    #[arg(long, default_value_t = 300)]
    kmeans_iters: usize,
    /// Base seed for the pool.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated lambda values to sweep.
    #[arg(long, value_delimiter = ',', conflicts_with = "m_grid")]
    lambda_grid: Option<Vec<f64>>,
    /// Comma-separated ensemble sizes to sweep.
    #[arg(long, value_delimiter = ',')]
    m_grid: Option<Vec<usize>>,
}

#[derive(Args)]
struct InputArgs {
    /// Feature CSV; a pool is generated from it on the fly.
    #[arg(long, conflicts_with = "pool")]
    data: Option<PathBuf>,
    /// Pre-built pool CSV (one clustering per column).
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Ground-truth label CSV, one label per line.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Treat the last column of --data as ground-truth labels.
    #[arg(long)]
    truth_last_column: bool,
    /// Standardize features before generating the pool.
    #[arg(long)]
    zscore: bool,
    /// Pool size when generating from --data.
    #[arg(long, default_value_t = 100)]
    pool_size: usize,
    /// Smallest cluster count drawn when generating.
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    /// Largest cluster count drawn when generating (default: floor of sqrt(n)).
    #[arg(long)]
    k_max: Option<usize>,
    /// Iteration cap for pool k-means.
    #[arg(long, default_value_t = 300)]
    kmeans_iters: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Base clusterings sampled per repetition.
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Number of repetitions.
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Noise-penalty weight.
    #[arg(long, default_value_t = 0.002)]
    lambda: f64,
    /// Consensus cluster count (default: distinct truth labels).
    #[arg(long)]
    k: Option<usize>,
    /// Consensus backend.
    #[arg(long, value_enum, default_value_t = Backend::Both)]
    backend: Backend,
    /// Tensor orientation for the solver.
    #[arg(long, value_enum, default_value_t = OrientArg::Lateral)]
    orient: OrientArg,
    /// Solver convergence tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Solver iteration cap.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Base seed for repetition sampling and consensus.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
    /// Persist each repetition's refined matrix.
    #[arg(long)]
    save_matrices: bool,
    /// Worker threads for repetitions (1 = bit-for-bit reproducible order).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Serialize)]
struct PoolManifest {
    data: String,
    truth: Option<String>,
    n_samples: usize,
    n_features: usize,
    pool_size: usize,
    k_min: usize,
    k_max: usize,
    kmeans_iters: usize,
    zscore: bool,
    seed: u64,
    cluster_counts: Vec<usize>,
    column_seeds: Vec<u64>,
}

fn load_features(
    path: &std::path::Path,
    truth_last_column: bool,
    zscore: bool,
) -> CliResult<(DataMatrix, Option<Vec<u32>>)> {
    let (data, truth) = io::read_data_csv(path, truth_last_column)?;
    let data = if zscore { data.zscored() } else { data };
    Ok((data, truth))
}

fn build_pool(
    data: &DataMatrix,
    args: &GenerateArgs,
) -> CliResult<(LabelMatrix, PoolManifest, Option<Vec<u32>>)> {
    let config = PoolConfig {
        pool_size: args.pool_size,
        k_min: args.k_min,
        k_max: args.k_max,
        kmeans_iters: args.kmeans_iters,
        seed: args.seed,
    };
    let (k_min, k_max) = config.k_range(data.n())?;
    let pool = generate_pool(data, &config)?;
    let manifest = PoolManifest {
        data: args.data.display().to_string(),
        truth: None,
        n_samples: data.n(),
        n_features: data.d(),
        pool_size: args.pool_size,
        k_min,
        k_max,
        kmeans_iters: args.kmeans_iters,
        zscore: args.zscore,
        seed: args.seed,
        cluster_counts: pool.ks.clone(),
        column_seeds: pool.seeds.clone(),
    };
    Ok((pool.labels, manifest, None))
}

fn cmd_generate(args: GenerateArgs) -> CliResult<()> {
    let (data, truth) = load_features(&args.data, args.truth_last_column, args.zscore)?;
    let (labels, mut manifest, _) = build_pool(&data, &args)?;
    std::fs::create_dir_all(&args.out_dir)?;
    io::write_pool_csv(&args.out_dir.join("pool.csv"), &labels)?;
    if let Some(truth) = &truth {
        let truth_path = args.out_dir.join("truth.csv");
        io::write_labels_csv(&truth_path, truth)?;
        manifest.truth = Some(truth_path.display().to_string());
    }
    io::write_json(&args.out_dir.join("pool_manifest.json"), &manifest)?;
    println!(
        "wrote {} clusterings of {} samples to {}",
        labels.n_clusterings(),
        labels.n_samples(),
        args.out_dir.display(),
    );
    Ok(())
}

/// Resolves the pool and truth labels from whichever input combination the
/// user supplied, generating and persisting a pool when needed.
fn resolve_inputs(
    inputs: &InputArgs,
    run: &RunArgs,
) -> CliResult<(LabelMatrix, Vec<u32>, SourcePaths)> {
    let mut sources = SourcePaths::default();
    let mut truth: Option<Vec<u32>> = None;

    if let Some(path) = &inputs.truth {
        truth = Some(io::read_labels_csv(path)?);
        sources.truth = Some(path.display().to_string());
    }

    let pool = match (&inputs.pool, &inputs.data) {
        (Some(path), None) => {
            sources.pool = Some(path.display().to_string());
            io::read_pool_csv(path)?
        }
        (None, Some(path)) => {
            sources.data = Some(path.display().to_string());
            let (data, data_truth) = load_features(path, inputs.truth_last_column, inputs.zscore)?;
            if truth.is_none() {
                truth = data_truth;
            }
            let config = PoolConfig {
                pool_size: inputs.pool_size,
                k_min: inputs.k_min,
                k_max: inputs.k_max,
                kmeans_iters: inputs.kmeans_iters,
                seed: run.seed,
            };
            let pool = generate_pool(&data, &config)?;
            std::fs::create_dir_all(&run.out_dir)?;
            io::write_pool_csv(&run.out_dir.join("pool.csv"), &pool.labels)?;
            pool.labels
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--pool and --data are mutually exclusive".into(),
            ));
        }
        (None, None) => {
            return Err(CliError::Usage(
                "either --pool or --data is required".into(),
            ));
        }
    };

    let truth = truth.ok_or_else(|| {
        CliError::Usage(
            "ground truth is required: pass --truth or --data with --truth-last-column".into(),
        )
    })?;
    Ok((pool, truth, sources))
}

fn ensemble_options(run: &RunArgs, truth: &[u32]) -> EnsembleOptions {
    let k = run
        .k
        .unwrap_or_else(|| truth.iter().collect::<BTreeSet<_>>().len());
    EnsembleOptions {
        m: run.m,
        reps: run.reps,
        k,
        backend: run.backend,
        solver: LtaConfig {
            lambda: run.lambda,
            tol: run.tol,
            max_iter: run.max_iter,
            orientation: run.orient.into(),
            ..LtaConfig::default()
        },
        seed: run.seed,
        save_matrices: run.save_matrices,
        threads: run.threads,
    }
}

fn cmd_ensemble(args: EnsembleArgs) -> CliResult<()> {
    let (pool, truth, sources) = resolve_inputs(&args.inputs, &args.run)?;
    let opts = ensemble_options(&args.run, &truth);
    let report = run_ensemble(&pool, &truth, sources, &opts, &args.run.out_dir)?;
    print!("{}", render_summary_table(&report.summary));
    let failed = report
        .repetitions
        .iter()
        .filter(|r| r.error.is_some())
        .count();
    if failed > 0 {
        eprintln!(
            "{failed} of {} repetitions failed; see report.json",
            opts.reps
        );
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let grid = match (&args.lambda_grid, &args.m_grid) {
        (Some(values), None) => SweepGrid::Lambda(values.clone()),
        (None, Some(values)) => SweepGrid::M(values.clone()),
        _ => {
            return Err(CliError::Usage(
                "exactly one of --lambda-grid or --m-grid is required".into(),
            ));
        }
    };
    let (pool, truth, sources) = resolve_inputs(&args.inputs, &args.run)?;
    let opts = ensemble_options(&args.run, &truth);
    let rows = run_sweep(&pool, &truth, sources, &opts, &grid, &args.run.out_dir)?;
    for row in &rows {
        println!(
            "{}={} {} {} mean={:.6} std={:.6}",
            row.parameter, row.value, row.method, row.metric, row.mean, row.std
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code: u8 = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Ensemble(args) => cmd_ensemble(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
