//! Argument parsing for the `rudp` binary. Every flag can also come from a
//! `--config` file of `key = value` lines; explicit flags win.

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use rudp_cli::commands::{
    cmd_benchmark, cmd_evaluate, cmd_fit, cmd_generate, BenchmarkConfig, EvaluateConfig,
    FitConfig, GenerateConfig,
};
use rudp_cli::config::{
    load_config_file, merge, merge_list, Baseline, DataSource, LayoutOpt, OnOff,
};
use std::collections::HashMap;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "rudp",
    about = "Robust unsupervised clustering via discriminative projection and adaptive graph learning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic clustered dataset as CSV.
    Generate(GenerateArgs),
    /// Fit the model to a dataset and write labels, trace and summary.
    Fit(FitArgs),
    /// Compare predicted labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Sweep dimensions, corruption levels and hyperparameters across
    /// repeated seeded runs of the method and enabled baselines.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct CommonDataArgs {
    /// Input CSV path; omit to use a synthetic dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// CSV orientation: samples as rows or columns.
    #[arg(long)]
    layout: Option<LayoutOpt>,
    /// 0-based column holding ground-truth labels (samples-as-rows only).
    #[arg(long)]
    label_col: Option<usize>,
    /// Synthetic source: number of clusters.
    #[arg(long)]
    synth_clusters: Option<usize>,
    /// Synthetic source: samples per cluster.
    #[arg(long)]
    synth_per_class: Option<usize>,
    /// Synthetic source: ambient dimension.
    #[arg(long)]
    synth_dim: Option<usize>,
    /// Synthetic source: dimension of the cluster-bearing subspace.
    #[arg(long)]
    synth_subspace: Option<usize>,
    /// Synthetic source: distance between cluster means.
    #[arg(long)]
    synth_separation: Option<f64>,
    /// Synthetic source: noise level.
    #[arg(long)]
    synth_sigma: Option<f64>,
}

impl CommonDataArgs {
    fn resolve(self, file: &HashMap<String, String>) -> Result<DataSource> {
        let data = match self.data {
            Some(p) => Some(p),
            None => file.get("data").map(PathBuf::from),
        };
        if let Some(path) = data {
            let layout = merge(self.layout, file, "layout")?.unwrap_or(LayoutOpt::Rows);
            let label_col = merge(self.label_col, file, "label-col")?;
            Ok(DataSource::Csv {
                path,
                layout,
                label_col,
            })
        } else {
            let dim = merge(self.synth_dim, file, "synth-dim")?.unwrap_or(52);
            Ok(DataSource::Synth {
                clusters: merge(self.synth_clusters, file, "synth-clusters")?.unwrap_or(3),
                per_class: merge(self.synth_per_class, file, "synth-per-class")?.unwrap_or(50),
                dim,
                subspace_dim: merge(self.synth_subspace, file, "synth-subspace")?
                    .unwrap_or_else(|| 10.min(dim)),
                separation: merge(self.synth_separation, file, "synth-separation")?.unwrap_or(8.0),
                sigma: merge(self.synth_sigma, file, "synth-sigma")?.unwrap_or(1.0),
            })
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    subspace_dim: Option<usize>,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    source: CommonDataArgs,
    /// Z-score features before fitting (on/off).
    #[arg(long)]
    standardize: Option<OnOff>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Target dimension of the projection.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative objective-change stopping threshold.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted labels CSV.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth labels CSV.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    source: CommonDataArgs,
    #[arg(long)]
    standardize: Option<OnOff>,
    /// Comma-separated target dimensions, e.g. 5,10,25.
    #[arg(long)]
    dim: Option<String>,
    /// Comma-separated outlier fractions, e.g. 0,0.01,0.05.
    #[arg(long)]
    outlier_frac: Option<String>,
    /// Comma-separated SNR levels in dB, e.g. 0,5,10,15,20.
    #[arg(long)]
    snr_db: Option<String>,
    /// Comma-separated graph weights.
    #[arg(long)]
    lambda: Option<String>,
    /// Comma-separated entropy weights.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Seeded repetitions per sweep point.
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated baselines to run alongside: kmeans,pca.
    #[arg(long)]
    baselines: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent benchmark cells.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn file_map(path: &Option<PathBuf>) -> Result<HashMap<String, String>> {
    match path {
        Some(p) => load_config_file(p),
        None => Ok(HashMap::new()),
    }
}

fn required_out_dir(flag: Option<PathBuf>, file: &HashMap<String, String>) -> Result<PathBuf> {
    match flag.or_else(|| file.get("out-dir").map(PathBuf::from)) {
        Some(p) => Ok(p),
        None => bail!("--out-dir is required"),
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate(args) => {
            let file = file_map(&args.config)?;
            let dim = merge(args.dim, &file, "dim")?.unwrap_or(52);
            let cfg = GenerateConfig {
                clusters: merge(args.clusters, &file, "clusters")?.unwrap_or(3),
                per_class: merge(args.per_class, &file, "per-class")?.unwrap_or(50),
                dim,
                subspace_dim: merge(args.subspace_dim, &file, "subspace-dim")?
                    .unwrap_or_else(|| 10.min(dim)),
                separation: merge(args.separation, &file, "separation")?.unwrap_or(8.0),
                sigma: merge(args.sigma, &file, "sigma")?.unwrap_or(1.0),
                seed: merge(args.seed, &file, "seed")?.unwrap_or(0),
                out_dir: required_out_dir(args.out_dir, &file)?,
            };
            cmd_generate(&cfg)
        }
        Command::Fit(args) => {
            let file = file_map(&args.config)?;
            let dim = match merge(args.dim, &file, "dim")? {
                Some(d) => d,
                None => bail!("--dim is required for fit"),
            };
            let clusters = match merge(args.clusters, &file, "clusters")? {
                Some(c) => c,
                None => bail!("--clusters is required for fit"),
            };
            let cfg = FitConfig {
                source: args.source.resolve(&file)?,
                standardize: merge(args.standardize, &file, "standardize")?
                    .unwrap_or(OnOff::On)
                    .is_on(),
                lambda: merge(args.lambda, &file, "lambda")?.unwrap_or(0.1),
                beta: merge(args.beta, &file, "beta")?.unwrap_or(0.1),
                dim,
                clusters,
                knn: merge(args.knn, &file, "knn")?.unwrap_or(5),
                max_iters: merge(args.max_iters, &file, "max-iters")?.unwrap_or(100),
                tol: merge(args.tol, &file, "tol")?.unwrap_or(1e-5),
                seed: merge(args.seed, &file, "seed")?.unwrap_or(0),
                out_dir: required_out_dir(args.out_dir, &file)?,
            };
            cmd_fit(&cfg)
        }
        Command::Evaluate(args) => {
            let cfg = EvaluateConfig {
                pred: args.pred,
                truth: args.truth,
                out_dir: match args.out_dir {
                    Some(p) => p,
                    None => bail!("--out-dir is required"),
                },
            };
            cmd_evaluate(&cfg)
        }
        Command::Benchmark(args) => {
            let file = file_map(&args.config)?;
            let clusters = match merge(args.clusters, &file, "clusters")? {
                Some(c) => c,
                None => bail!("--clusters is required for benchmark"),
            };
            let snr_dbs = match merge_list::<f64>(args.snr_db, &file, "snr-db")? {
                Some(list) => list.into_iter().map(Some).collect(),
                None => vec![None],
            };
            let cfg = BenchmarkConfig {
                source: args.source.resolve(&file)?,
                standardize: merge(args.standardize, &file, "standardize")?
                    .unwrap_or(OnOff::On)
                    .is_on(),
                dims: match merge_list(args.dim, &file, "dim")? {
                    Some(d) => d,
                    None => bail!("--dim is required for benchmark (comma list allowed)"),
                },
                outlier_fracs: merge_list(args.outlier_frac, &file, "outlier-frac")?
                    .unwrap_or_else(|| vec![0.0]),
                snr_dbs,
                lambdas: merge_list(args.lambda, &file, "lambda")?.unwrap_or_else(|| vec![0.1]),
                betas: merge_list(args.beta, &file, "beta")?.unwrap_or_else(|| vec![0.1]),
                clusters,
                knn: merge(args.knn, &file, "knn")?.unwrap_or(5),
                max_iters: merge(args.max_iters, &file, "max-iters")?.unwrap_or(100),
                tol: merge(args.tol, &file, "tol")?.unwrap_or(1e-5),
                repeats: merge(args.repeats, &file, "repeats")?.unwrap_or(10),
                baselines: merge_list(args.baselines, &file, "baselines")?
                    .unwrap_or_else(|| vec![Baseline::Kmeans, Baseline::Pca]),
                seed: merge(args.seed, &file, "seed")?.unwrap_or(0),
                workers: merge(args.workers, &file, "workers")?.unwrap_or(1),
                out_dir: required_out_dir(args.out_dir, &file)?,
            };
            cmd_benchmark(&cfg)
        }
    }
}
