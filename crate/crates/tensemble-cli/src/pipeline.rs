//! The repetition pipeline: sample → accumulate → refine → cluster → score.
//!
//! One *run* repeats the whole chain `reps` times, each repetition with a
//! seed derived from `(base seed, repetition index)`, and reports per-metric
//! mean and population standard deviation for the base clusterings and each
//! enabled consensus backend. Repetitions are independent; with `threads > 1`
//! they execute in parallel and still produce the same report, ordered by
//! repetition index.
//!
//! A failed repetition is recorded in its record's `error` field and excluded
//! from the summary; the run itself keeps going. Solver non-convergence is
//! not a failure.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use tensemble::basegen::sample_indices;
use tensemble::consensus::{hierarchical_consensus, spectral_consensus};
use tensemble::ensemble::{co_association, coherent_link, LabelMatrix};
use tensemble::metrics::{score, MetricReport};
use tensemble::seeds;
use tensemble::solver::{solve, LtaConfig};

use crate::{io, CliError, CliResult};

/// Tag for repetition-seed derivation.
const REP_STREAM: u64 = 0x7265_7073;
/// Tag for the spectral-consensus seed inside a repetition.
const SPECTRAL_STREAM: u64 = 0x7370_6563;

/// Which consensus backend(s) to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Spectral clustering of the refined matrix.
    Sc,
    /// Agglomerative (average-linkage) clustering of the refined matrix.
    Ea,
    /// Both backends.
    Both,
}

impl Backend {
    fn runs_sc(self) -> bool {
        matches!(self, Backend::Sc | Backend::Both)
    }

    fn runs_ea(self) -> bool {
        matches!(self, Backend::Ea | Backend::Both)
    }
}

/// Everything a run needs besides the pool and the truth labels.
#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    /// Base clusterings sampled per repetition.
    pub m: usize,
    /// Number of repetitions.
    pub reps: usize,
    /// Cluster count handed to the consensus backends.
    pub k: usize,
    /// Backend selection.
    pub backend: Backend,
    /// Solver configuration.
    pub solver: LtaConfig,
    /// Base seed; repetition seeds derive from it.
    pub seed: u64,
    /// Persist each repetition's refined matrix.
    pub save_matrices: bool,
    /// Worker threads for repetitions (1 = fully sequential).
    pub threads: usize,
}

/// Input provenance recorded in the manifest.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SourcePaths {
    /// Feature CSV, when the pool was generated in-run.
    pub data: Option<String>,
    /// Pool CSV, when a pre-built pool was loaded.
    pub pool: Option<String>,
    /// Ground-truth CSV (absent when the truth came from the data file).
    pub truth: Option<String>,
}

/// Everything needed to reproduce a run bit-for-bit in single-threaded mode.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Where the inputs came from.
    pub sources: SourcePaths,
    /// Samples per clustering.
    pub n_samples: usize,
    /// Columns available in the pool.
    pub pool_columns: usize,
    /// Consensus cluster count.
    pub k: usize,
    /// Base clusterings sampled per repetition.
    pub m: usize,
    /// Number of repetitions.
    pub reps: usize,
    /// Backend selection.
    pub backend: Backend,
    /// Base seed.
    pub seed: u64,
    /// Derived seed of each repetition.
    pub repetition_seeds: Vec<u64>,
    /// Solver configuration.
    pub solver: LtaConfig,
    /// Whether refined matrices were persisted.
    pub save_matrices: bool,
    /// Worker threads used.
    pub threads: usize,
}

/// Outcome of one repetition.
#[derive(Debug, Clone, Serialize)]
pub struct RepRecord {
    /// Repetition index.
    pub rep: usize,
    /// Derived seed.
    pub seed: u64,
    /// Pool columns sampled, in draw order.
    pub column_indices: Vec<usize>,
    /// Solver iterations run.
    pub solver_iterations: usize,
    /// Whether the solver reached its tolerance.
    pub converged: bool,
    /// Best residual the solver saw.
    pub final_residual: f64,
    /// Wall-clock seconds for the repetition.
    pub wall_clock_s: f64,
    /// Mean metrics of the sampled base clusterings.
    pub base: Option<MetricReport>,
    /// Metrics of the spectral consensus, when enabled.
    pub sc: Option<MetricReport>,
    /// Metrics of the agglomerative consensus, when enabled.
    pub ea: Option<MetricReport>,
    /// Failure description; the repetition is excluded from the summary.
    pub error: Option<String>,
}

/// One aggregated summary line.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    /// `base`, `ours_sc`, or `ours_ea`.
    pub method: String,
    /// Metric name.
    pub metric: String,
    /// Mean over successful repetitions.
    pub mean: f64,
    /// Population standard deviation over successful repetitions.
    pub std: f64,
}

/// Full outcome of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// The reproduction recipe.
    pub manifest: RunManifest,
    /// Per-repetition records, ordered by index.
    pub repetitions: Vec<RepRecord>,
    /// Aggregated rows: method × metric.
    pub summary: Vec<SummaryRow>,
}

fn mean_report(reports: &[MetricReport]) -> Option<MetricReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mut sums = [0.0f64; 7];
    for report in reports {
        for (slot, (_, value)) in sums.iter_mut().zip(report.named()) {
            *slot += value;
        }
    }
    Some(MetricReport {
        acc: sums[0] / n,
        nmi: sums[1] / n,
        purity: sums[2] / n,
        ari: sums[3] / n,
        f1: sums[4] / n,
        precision: sums[5] / n,
        recall: sums[6] / n,
    })
}

fn run_repetition(
    rep: usize,
    pool: &LabelMatrix,
    truth: &[u32],
    opts: &EnsembleOptions,
    out_dir: &Path,
) -> RepRecord {
    let seed = seeds::derive(opts.seed, &[REP_STREAM, rep as u64]);
    let started = Instant::now();
    let mut record = RepRecord {
        rep,
        seed,
        column_indices: Vec::new(),
        solver_iterations: 0,
        converged: false,
        final_residual: f64::NAN,
        wall_clock_s: 0.0,
        base: None,
        sc: None,
        ea: None,
        error: None,
    };

    let outcome = (|| -> CliResult<()> {
        let indices = sample_indices(pool.n_clusterings(), opts.m, seed)?;
        record.column_indices = indices.clone();
        let sampled = pool.select_columns(&indices)?;

        let base_scores: Vec<MetricReport> = (0..opts.m)
            .map(|j| score(&sampled.column(j).to_vec(), truth))
            .collect::<Result<_, _>>()?;
        record.base = mean_report(&base_scores);

        let coassoc = co_association(&sampled)?;
        let links = coherent_link(&coassoc)?;
        let solved = solve(&coassoc, &links, opts.solver.clone())?;
        record.solver_iterations = solved.iterations;
        record.converged = solved.converged;
        record.final_residual = solved.final_residual;

        let rep_dir = out_dir.join(format!("rep_{rep}"));
        if opts.backend.runs_sc() {
            let partition = spectral_consensus(
                &solved.refined,
                opts.k,
                seeds::derive(seed, &[SPECTRAL_STREAM]),
            )?;
            record.sc = Some(score(partition.labels(), truth)?);
            io::write_labels_csv(&rep_dir.join("labels_sc.csv"), partition.labels())?;
        }
        if opts.backend.runs_ea() {
            let partition = hierarchical_consensus(&solved.refined, opts.k)?;
            record.ea = Some(score(partition.labels(), truth)?);
            io::write_labels_csv(&rep_dir.join("labels_ea.csv"), partition.labels())?;
        }
        if opts.save_matrices {
            io::write_matrix_csv(&rep_dir.join("refined.csv"), solved.refined.values())?;
        }
        Ok(())
    })();

    if let Err(err) = outcome {
        record.error = Some(err.to_string());
    }
    record.wall_clock_s = started.elapsed().as_secs_f64();
    // metrics.json is written last so it reflects the final record.
    let path = out_dir.join(format!("rep_{rep}")).join("metrics.json");
    if let Err(err) = io::write_json(&path, &record) {
        record.error.get_or_insert(err.to_string());
    }
    record
}

type MethodColumn = (&'static str, fn(&RepRecord) -> Option<MetricReport>);

fn summarize(records: &[RepRecord], backend: Backend) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let mut methods: Vec<MethodColumn> = vec![("base", |r| r.base)];
    if backend.runs_sc() {
        methods.push(("ours_sc", |r| r.sc));
    }
    if backend.runs_ea() {
        methods.push(("ours_ea", |r| r.ea));
    }
    for (method, extract) in methods {
        let reports: Vec<MetricReport> = records
            .iter()
            .filter(|r| r.error.is_none())
            .filter_map(extract)
            .collect();
        if reports.is_empty() {
            continue;
        }
        let n = reports.len() as f64;
        for slot in 0..7 {
            let metric = reports[0].named()[slot].0;
            let values: Vec<f64> = reports.iter().map(|r| r.named()[slot].1).collect();
            let mean = values.iter().sum::<f64>() / n;
            let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            rows.push(SummaryRow {
                method: method.to_string(),
                metric: metric.to_string(),
                mean,
                std: variance.sqrt(),
            });
        }
    }
    rows
}

fn validate(pool: &LabelMatrix, truth: &[u32], opts: &EnsembleOptions) -> CliResult<()> {
    opts.solver
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if truth.len() != pool.n_samples() {
        return Err(CliError::Data(format!(
            "truth has {} labels but the pool clusters {} samples",
            truth.len(),
            pool.n_samples(),
        )));
    }
    let mut checks = vec![
        ("reps", opts.reps >= 1),
        ("threads", opts.threads >= 1),
        ("m", opts.m >= 1 && opts.m <= pool.n_clusterings()),
        ("k", opts.k >= 1 && opts.k <= pool.n_samples()),
    ];
    if let Some((name, _)) = checks.drain(..).find(|(_, ok)| !ok) {
        return Err(CliError::Usage(format!(
            "{name} is out of range for this pool (n = {}, columns = {})",
            pool.n_samples(),
            pool.n_clusterings(),
        )));
    }
    Ok(())
}

/// Runs the full repetition loop and persists `manifest.json`, per-repetition
/// artifacts, `summary.csv`, and `report.json` under `out_dir`.
pub fn run_ensemble(
    pool: &LabelMatrix,
    truth: &[u32],
    sources: SourcePaths,
    opts: &EnsembleOptions,
    out_dir: &Path,
) -> CliResult<RunReport> {
    validate(pool, truth, opts)?;
    std::fs::create_dir_all(out_dir)?;

    let manifest = RunManifest {
        sources,
        n_samples: pool.n_samples(),
        pool_columns: pool.n_clusterings(),
        k: opts.k,
        m: opts.m,
        reps: opts.reps,
        backend: opts.backend,
        seed: opts.seed,
        repetition_seeds: (0..opts.reps)
            .map(|r| seeds::derive(opts.seed, &[REP_STREAM, r as u64]))
            .collect(),
        solver: opts.solver.clone(),
        save_matrices: opts.save_matrices,
        threads: opts.threads,
    };
    io::write_json(&out_dir.join("manifest.json"), &manifest)?;

    let repetitions: Vec<RepRecord> = if opts.threads > 1 {
        let thread_pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        thread_pool.install(|| {
            (0..opts.reps)
                .into_par_iter()
                .map(|rep| run_repetition(rep, pool, truth, opts, out_dir))
                .collect()
        })
    } else {
        (0..opts.reps)
            .map(|rep| run_repetition(rep, pool, truth, opts, out_dir))
            .collect()
    };

    let summary = summarize(&repetitions, opts.backend);
    write_summary_csv(&out_dir.join("summary.csv"), &summary)?;
    let report = RunReport {
        manifest,
        repetitions,
        summary,
    };
    io::write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

/// Writes the aggregated rows as `method,metric,mean,std` with fixed
/// six-decimal formatting, so identical runs are byte-identical.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> CliResult<()> {
    let mut text = String::from("method,metric,mean,std\n");
    for row in rows {
        text.push_str(&format!(
            "{},{},{:.6},{:.6}\n",
            row.method, row.metric, row.mean, row.std
        ));
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Renders the summary as an aligned text table.
pub fn render_summary_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:<10} {:>10} {:>10}\n",
        "method", "metric", "mean", "std"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<10} {:<10} {:>10.6} {:>10.6}\n",
            row.method, row.metric, row.mean, row.std
        ));
    }
    out
}

/// The swept parameter and its grid.
#[derive(Debug, Clone)]
pub enum SweepGrid {
    /// Noise-penalty weights to try.
    Lambda(Vec<f64>),
    /// Ensemble sizes to try.
    M(Vec<usize>),
}

/// One aggregated line of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// Swept parameter name (`lambda` or `m`).
    pub parameter: String,
    /// Grid value.
    pub value: f64,
    /// `base`, `ours_sc`, or `ours_ea`.
    pub method: String,
    /// Metric name.
    pub metric: String,
    /// Mean over successful repetitions.
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Runs one full ensemble per grid point (same seeds at every point) and
/// collects a long-format table; each point's artifacts land in their own
/// subdirectory.
pub fn run_sweep(
    pool: &LabelMatrix,
    truth: &[u32],
    sources: SourcePaths,
    opts: &EnsembleOptions,
    grid: &SweepGrid,
    out_dir: &Path,
) -> CliResult<Vec<SweepRow>> {
    let points: Vec<(String, f64, EnsembleOptions)> = match grid {
        SweepGrid::Lambda(values) => {
            if values.is_empty() {
                return Err(CliError::Usage("empty lambda grid".into()));
            }
            values
                .iter()
                .map(|&lambda| {
                    let mut point = opts.clone();
                    point.solver.lambda = lambda;
                    ("lambda".to_string(), lambda, point)
                })
                .collect()
        }
        SweepGrid::M(values) => {
            if values.is_empty() {
                return Err(CliError::Usage("empty m grid".into()));
            }
            values
                .iter()
                .map(|&m| {
                    let mut point = opts.clone();
                    point.m = m;
                    ("m".to_string(), m as f64, point)
                })
                .collect()
        }
    };

    let mut rows = Vec::new();
    for (parameter, value, point_opts) in &points {
        let sub_dir = out_dir.join(format!("{parameter}_{value}"));
        let report = run_ensemble(pool, truth, sources.clone(), point_opts, &sub_dir)?;
        for summary in report.summary {
            rows.push(SweepRow {
                parameter: parameter.clone(),
                value: *value,
                method: summary.method,
                metric: summary.metric,
                mean: summary.mean,
                std: summary.std,
            });
        }
    }

    let mut text = String::from("parameter,value,method,metric,mean,std\n");
    for row in &rows {
        text.push_str(&format!(
            "{},{},{},{},{:.6},{:.6}\n",
            row.parameter, row.value, row.method, row.metric, row.mean, row.std
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("sweep.csv"), text)?;
    Ok(rows)
}
