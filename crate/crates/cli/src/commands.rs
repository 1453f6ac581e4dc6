//! The four subcommands. Each writes machine-readable outputs into its
//! `--out-dir` and returns an error (nonzero exit) only when the requested
//! action itself fails; individual benchmark cells record their errors and
//! the run continues.

use crate::config::{Baseline, DataSource};
use crate::output::{fmt_f64, OutDir};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use rudp::data::{
    inject_noise_snr, inject_outliers, load_labels_csv, standardize, CorruptionKind,
    CorruptionScope, CorruptionSpec, Dataset,
};
use rudp::metrics::evaluate;
use rudp::model::{fit, Hyperparams};
use std::path::PathBuf;
use std::time::Instant;

fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------- generate

#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub clusters: usize,
    pub per_class: usize,
    pub dim: usize,
    pub subspace_dim: usize,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl GenerateConfig {
    fn echo(&self) -> Vec<String> {
        vec![format!(
            "command=generate clusters={} per_class={} dim={} subspace_dim={} separation={} \
             sigma={} seed={}",
            self.clusters,
            self.per_class,
            self.dim,
            self.subspace_dim,
            self.separation,
            self.sigma,
            self.seed
        )]
    }
}

pub fn cmd_generate(cfg: &GenerateConfig) -> Result<()> {
    let ds = rudp::data::synth_clusters(
        cfg.clusters,
        cfg.per_class,
        cfg.dim,
        cfg.subspace_dim,
        cfg.separation,
        cfg.sigma,
        cfg.seed,
    )?;
    let out = OutDir::new(&cfg.out_dir, cfg.echo())?;

    let (d, n) = ds.dims();
    let rows: Vec<String> = (0..n)
        .map(|j| {
            (0..d)
                .map(|i| fmt_f64(ds.x[(i, j)]))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    out.write_csv("data.csv", None, &rows)?;

    let truth = ds.truth.as_ref().expect("synthetic data carries labels");
    let label_rows: Vec<String> = truth
        .iter()
        .enumerate()
        .map(|(i, &l)| format!("{i},{l}"))
        .collect();
    out.write_csv("truth.csv", Some("index,label"), &label_rows)?;

    out.write_kv(
        "run_config.txt",
        &[
            ("samples".into(), n.to_string()),
            ("features".into(), d.to_string()),
            ("provenance".into(), ds.provenance.source.clone()),
        ],
    )?;
    println!(
        "generated {} samples x {} features into {}",
        n,
        d,
        cfg.out_dir.display()
    );
    Ok(())
}

// --------------------------------------------------------------------- fit

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub source: DataSource,
    pub standardize: bool,
    pub lambda: f64,
    pub beta: f64,
    pub dim: usize,
    pub clusters: usize,
    pub knn: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl FitConfig {
    fn echo(&self) -> Vec<String> {
        vec![format!(
            "command=fit {} standardize={} lambda={} beta={} dim={} clusters={} knn={} \
             max_iters={} tol={} seed={}",
            self.source.describe(),
            self.standardize,
            self.lambda,
            self.beta,
            self.dim,
            self.clusters,
            self.knn,
            self.max_iters,
            self.tol,
            self.seed
        )]
    }

    fn hyperparams(&self) -> Hyperparams {
        let mut hp = Hyperparams::new(self.dim, self.clusters);
        hp.lambda = self.lambda;
        hp.beta = self.beta;
        hp.knn = self.knn;
        hp.max_outer_iters = self.max_iters;
        hp.eps_converge = self.tol;
        hp.seed = self.seed;
        hp
    }
}

pub fn cmd_fit(cfg: &FitConfig) -> Result<()> {
    let ds = cfg.source.realize(cfg.seed)?;
    let ds = if cfg.standardize { standardize(&ds) } else { ds };
    let result = fit(&ds.x, &cfg.hyperparams()).context("optimization aborted")?;

    let out = OutDir::new(&cfg.out_dir, cfg.echo())?;
    let label_rows: Vec<String> = result
        .labels
        .iter()
        .enumerate()
        .map(|(i, &l)| format!("{i},{l}"))
        .collect();
    out.write_csv("labels.csv", Some("index,label"), &label_rows)?;

    let trace_rows: Vec<String> = result
        .trace
        .iter()
        .map(|e| {
            format!(
                "{},{},{},{},{}",
                e.iteration,
                fmt_f64(e.objective),
                fmt_f64(e.relative_delta),
                fmt_f64(e.ortho_w),
                fmt_f64(e.ortho_g)
            )
        })
        .collect();
    out.write_csv(
        "trace.csv",
        Some("iter,objective,relative_delta,ortho_w,ortho_g"),
        &trace_rows,
    )?;

    let final_objective = result.trace.last().map_or(f64::NAN, |e| e.objective);
    out.write_kv(
        "model_summary.txt",
        &[
            ("final_objective".into(), fmt_f64(final_objective)),
            ("iterations".into(), result.iterations_used.to_string()),
            ("converged".into(), result.converged.to_string()),
            (
                "components_found".into(),
                result.components_found.to_string(),
            ),
            ("samples".into(), ds.x.cols().to_string()),
            ("features".into(), ds.x.rows().to_string()),
            ("lambda".into(), fmt_f64(cfg.lambda)),
            ("beta".into(), fmt_f64(cfg.beta)),
            ("dim".into(), cfg.dim.to_string()),
            ("clusters".into(), cfg.clusters.to_string()),
            ("knn".into(), cfg.knn.to_string()),
            ("max_iters".into(), cfg.max_iters.to_string()),
            ("tol".into(), fmt_f64(cfg.tol)),
            ("seed".into(), cfg.seed.to_string()),
            ("standardize".into(), cfg.standardize.to_string()),
        ],
    )?;
    println!(
        "fit: {} sweeps, converged={}, final objective {:.6}, labels in {}",
        result.iterations_used,
        result.converged,
        final_objective,
        out.path("labels.csv").display()
    );
    Ok(())
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Clone)]
pub struct EvaluateConfig {
    pub pred: PathBuf,
    pub truth: PathBuf,
    pub out_dir: PathBuf,
}

pub fn cmd_evaluate(cfg: &EvaluateConfig) -> Result<()> {
    let pred = load_labels_csv(&cfg.pred)?;
    let truth = load_labels_csv(&cfg.truth)?;
    let report = evaluate(&pred, &truth)?;

    let echo = vec![format!(
        "command=evaluate pred={} truth={}",
        cfg.pred.display(),
        cfg.truth.display()
    )];
    let out = OutDir::new(&cfg.out_dir, echo)?;
    out.write_kv(
        "report.txt",
        &[
            ("acc".into(), fmt_f64(report.acc)),
            ("nmi".into(), fmt_f64(report.nmi)),
            ("pur".into(), fmt_f64(report.pur)),
            ("ari".into(), fmt_f64(report.ari)),
            ("samples".into(), pred.len().to_string()),
        ],
    )?;

    let header = std::iter::once("truth_class".to_string())
        .chain(report.pred_classes.iter().map(|p| format!("pred_{p}")))
        .collect::<Vec<_>>()
        .join(",");
    let rows: Vec<String> = report
        .confusion
        .iter()
        .zip(&report.truth_classes)
        .map(|(row, t)| {
            std::iter::once(t.to_string())
                .chain(row.iter().map(|c| c.to_string()))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    out.write_csv("confusion.csv", Some(&header), &rows)?;
    println!(
        "acc={} nmi={} pur={} ari={}",
        fmt_f64(report.acc),
        fmt_f64(report.nmi),
        fmt_f64(report.pur),
        fmt_f64(report.ari)
    );
    Ok(())
}

// --------------------------------------------------------------- benchmark

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub source: DataSource,
    pub standardize: bool,
    pub dims: Vec<usize>,
    pub outlier_fracs: Vec<f64>,
    pub snr_dbs: Vec<Option<f64>>,
    pub lambdas: Vec<f64>,
    pub betas: Vec<f64>,
    pub clusters: usize,
    pub knn: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub repeats: usize,
    pub baselines: Vec<Baseline>,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl BenchmarkConfig {
    fn echo(&self) -> Vec<String> {
        let snrs: Vec<String> = self
            .snr_dbs
            .iter()
            .map(|s| s.map_or("none".into(), |v| v.to_string()))
            .collect();
        vec![format!(
            "command=benchmark {} standardize={} dims={:?} outlier_fracs={:?} snr_dbs={:?} \
             lambdas={:?} betas={:?} clusters={} knn={} max_iters={} tol={} repeats={} \
             baselines={:?} seed={} workers={}",
            self.source.describe(),
            self.standardize,
            self.dims,
            self.outlier_fracs,
            snrs,
            self.lambdas,
            self.betas,
            self.clusters,
            self.knn,
            self.max_iters,
            self.tol,
            self.repeats,
            self.baselines.iter().map(|b| b.as_str()).collect::<Vec<_>>(),
            self.seed,
            self.workers
        )]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    method: Method,
    dim: usize,
    outlier_frac: f64,
    snr_db: Option<f64>,
    lambda: f64,
    beta: f64,
    repeat: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Rudp,
    Kmeans,
    Pca,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Rudp => "rudp",
            Method::Kmeans => "kmeans",
            Method::Pca => "pca",
        }
    }
}

struct CellOutcome {
    metrics: Option<(f64, f64, f64, f64, usize)>,
    runtime: f64,
    dataset_seed: u64,
    method_seed: u64,
    status: String,
}

fn prepare_dataset(cfg: &BenchmarkConfig, cell: &Cell, dataset_seed: u64) -> Result<Dataset> {
    let ds = cfg.source.realize(dataset_seed)?;
    if ds.truth.is_none() {
        bail!("benchmark needs ground-truth labels (synthetic source or --label-col)");
    }
    let mut ds = if cfg.standardize { standardize(&ds) } else { ds };
    if cell.outlier_frac > 0.0 {
        let spec = CorruptionSpec {
            kind: CorruptionKind::Outliers {
                fraction: cell.outlier_frac,
            },
            scope: CorruptionScope::Samples,
            seed: mix_seed(dataset_seed, 0xA),
        };
        ds = inject_outliers(&ds, &spec)?;
    }
    if let Some(db) = cell.snr_db {
        ds = inject_noise_snr(&ds, db, mix_seed(dataset_seed, 0xB))?;
    }
    Ok(ds)
}

fn run_cell(cfg: &BenchmarkConfig, cell: &Cell) -> CellOutcome {
    let dataset_seed = mix_seed(cfg.seed, cell.repeat as u64);
    let method_seed = mix_seed(dataset_seed, 0xC0 + cell.method as u64);
    let started = Instant::now();
    let result = (|| -> Result<(Vec<usize>, Vec<usize>, usize)> {
        let ds = prepare_dataset(cfg, cell, dataset_seed)?;
        let truth = ds.truth.clone().unwrap();
        let (labels, iterations) = match cell.method {
            Method::Rudp => {
                let mut hp = Hyperparams::new(cell.dim, cfg.clusters);
                hp.lambda = cell.lambda;
                hp.beta = cell.beta;
                hp.knn = cfg.knn;
                hp.max_outer_iters = cfg.max_iters;
                hp.eps_converge = cfg.tol;
                hp.seed = method_seed;
                let fitted = fit(&ds.x, &hp)?;
                (fitted.labels, fitted.iterations_used)
            }
            Method::Kmeans => {
                let res =
                    rudp::baselines::kmeans(&ds.x.transpose(), cfg.clusters, method_seed, 300, 5)?;
                (res.labels, res.iterations)
            }
            Method::Pca => {
                let pca = rudp::baselines::pca_project(&ds.x, cell.dim)?;
                let res = rudp::baselines::kmeans(
                    &pca.projected.transpose(),
                    cfg.clusters,
                    method_seed,
                    300,
                    5,
                )?;
                (res.labels, res.iterations)
            }
        };
        Ok((labels, truth, iterations))
    })();
    let runtime = started.elapsed().as_secs_f64();
    match result.and_then(|(labels, truth, iterations)| {
        let report = evaluate(&labels, &truth)?;
        Ok((report, iterations))
    }) {
        Ok((report, iterations)) => CellOutcome {
            metrics: Some((report.acc, report.nmi, report.pur, report.ari, iterations)),
            runtime,
            dataset_seed,
            method_seed,
            status: "ok".into(),
        },
        Err(err) => CellOutcome {
            metrics: None,
            runtime,
            dataset_seed,
            method_seed,
            status: format!("error: {}", err.to_string().replace([',', '\n'], ";")),
        },
    }
}

pub fn cmd_benchmark(cfg: &BenchmarkConfig) -> Result<()> {
    if cfg.repeats == 0 {
        bail!("repeats must be at least 1");
    }
    let mut methods = vec![Method::Rudp];
    for baseline in &cfg.baselines {
        methods.push(match baseline {
            Baseline::Kmeans => Method::Kmeans,
            Baseline::Pca => Method::Pca,
        });
    }

    let mut cells = Vec::new();
    for &method in &methods {
        for &dim in &cfg.dims {
            for &outlier_frac in &cfg.outlier_fracs {
                for &snr_db in &cfg.snr_dbs {
                    for &lambda in &cfg.lambdas {
                        for &beta in &cfg.betas {
                            for repeat in 0..cfg.repeats {
                                cells.push(Cell {
                                    method,
                                    dim,
                                    outlier_frac,
                                    snr_db,
                                    lambda,
                                    beta,
                                    repeat,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .context("building worker pool")?;
    let outcomes: Vec<CellOutcome> =
        pool.install(|| cells.par_iter().map(|cell| run_cell(cfg, cell)).collect());

    let out = OutDir::new(&cfg.out_dir, cfg.echo())?;
    let header = "method,dim,outlier_frac,snr_db,lambda,beta,repeat,dataset_seed,method_seed,\
                  acc,nmi,pur,ari,iterations,runtime_s,status";
    let mut rows = Vec::with_capacity(cells.len());
    for (cell, outcome) in cells.iter().zip(&outcomes) {
        let (acc, nmi, pur, ari, iters) = match outcome.metrics {
            Some((a, n, p, r, i)) => (
                fmt_f64(a),
                fmt_f64(n),
                fmt_f64(p),
                fmt_f64(r),
                i.to_string(),
            ),
            None => Default::default(),
        };
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{acc},{nmi},{pur},{ari},{iters},{},{}",
            cell.method.name(),
            cell.dim,
            fmt_f64(cell.outlier_frac),
            cell.snr_db.map_or(String::new(), fmt_f64),
            fmt_f64(cell.lambda),
            fmt_f64(cell.beta),
            cell.repeat,
            outcome.dataset_seed,
            outcome.method_seed,
            fmt_f64(outcome.runtime),
            outcome.status
        ));
    }
    out.write_csv("results.csv", Some(header), &rows)?;

    // Mean over repetitions per sweep point, mirroring the long rows.
    let mut aggregated = Vec::new();
    let mut group_start = 0;
    while group_start < cells.len() {
        let key = &cells[group_start];
        let mut group_end = group_start;
        while group_end < cells.len() && same_group(key, &cells[group_end]) {
            group_end += 1;
        }
        let group: Vec<&CellOutcome> = outcomes[group_start..group_end].iter().collect();
        let ok: Vec<(f64, f64, f64, f64, usize)> =
            group.iter().filter_map(|o| o.metrics).collect();
        let mean = |pick: fn(&(f64, f64, f64, f64, usize)) -> f64| -> String {
            if ok.is_empty() {
                String::new()
            } else {
                fmt_f64(ok.iter().map(pick).sum::<f64>() / ok.len() as f64)
            }
        };
        let ok_counter = format!("{}/{}", ok.len(), group.len());
        aggregated.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            key.method.name(),
            key.dim,
            fmt_f64(key.outlier_frac),
            key.snr_db.map_or(String::new(), fmt_f64),
            fmt_f64(key.lambda),
            fmt_f64(key.beta),
            mean(|m| m.0),
            mean(|m| m.1),
            mean(|m| m.2),
            mean(|m| m.3),
            ok_counter,
        ));
        group_start = group_end;
    }
    out.write_csv(
        "aggregated.csv",
        Some("method,dim,outlier_frac,snr_db,lambda,beta,mean_acc,mean_nmi,mean_pur,mean_ari,ok"),
        &aggregated,
    )?;

    let failures = outcomes.iter().filter(|o| o.metrics.is_none()).count();
    println!(
        "benchmark: {} cells ({failures} failed), results in {}",
        cells.len(),
        out.path("results.csv").display()
    );
    Ok(())
}

fn same_group(a: &Cell, b: &Cell) -> bool {
    a.method == b.method
        && a.dim == b.dim
        && a.outlier_frac == b.outlier_frac
        && a.snr_db == b.snr_db
        && a.lambda == b.lambda
        && a.beta == b.beta
}
