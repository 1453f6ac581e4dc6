//! Dataset ingestion, standardization, synthetic cluster generation, the
//! two corruption protocols (sample outliers and SNR-controlled noise) and
//! sliding-window segmentation for signal data.
//!
//! All randomized operations are bitwise reproducible for a fixed seed.

use crate::error::{Error, Result};
use crate::matrix::{random_orthonormal, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;
use std::path::Path;

/// Source description plus an audit trail of everything done to the data.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub source: String,
    pub notes: Vec<String>,
    /// Sample (column) indices corrupted by the outlier protocol.
    pub corrupted_samples: Vec<usize>,
    /// Entry coordinates corrupted by the entrywise outlier protocol.
    pub corrupted_entries: Vec<(usize, usize)>,
}

/// A d×n data matrix (one sample per column) with optional ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    pub truth: Option<Vec<usize>>,
    pub feature_names: Option<Vec<String>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn dims(&self) -> (usize, usize) {
        (self.x.rows(), self.x.cols())
    }
}

/// Whether file rows are samples or features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    SamplesAsRows,
    SamplesAsColumns,
}

/// Which corruption to apply.
#[derive(Debug, Clone, Copy)]
pub enum CorruptionKind {
    /// Scale a random subset by 1.5.
    Outliers { fraction: f64 },
    /// Additive Gaussian noise at the given signal-to-noise ratio.
    SnrNoise { snr_db: f64 },
}

/// Whether outliers hit whole samples (columns) or individual entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionScope {
    Samples,
    Entries,
}

#[derive(Debug, Clone, Copy)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub scope: CorruptionScope,
    pub seed: u64,
}

/// Multiplier applied to corrupted values by the outlier protocol.
pub const OUTLIER_FACTOR: f64 = 1.5;

fn csv_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

/// Loads a numeric CSV. An optional single header line is detected by its
/// non-numeric cells; lines starting with `#` are ignored. With
/// [`Layout::SamplesAsRows`] an optional 0-based `label_column` is split
/// off into ground-truth labels.
pub fn load_csv(path: &Path, layout: Layout, label_column: Option<usize>) -> Result<Dataset> {
    if label_column.is_some() && layout != Layout::SamplesAsRows {
        return Err(Error::InvalidParam {
            name: "label_column",
            detail: "label column extraction needs samples-as-rows layout".into(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e.to_string()))?;

    let mut records: Vec<csv::StringRecord> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, format!("ragged or unreadable row: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(csv_err(path, "file contains no data rows"));
    }

    // Header detection: any non-numeric cell in the first row.
    let mut feature_names = None;
    let mut start = 0;
    if records[0].iter().any(|f| f.parse::<f64>().is_err()) {
        feature_names = Some(records[0].iter().map(str::to_string).collect::<Vec<_>>());
        start = 1;
        if records.len() == 1 {
            return Err(csv_err(path, "file contains only a header"));
        }
    }

    let width = records[start].len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(records.len() - start);
    let mut labels: Vec<usize> = Vec::new();
    for (offset, record) in records[start..].iter().enumerate() {
        let mut row = Vec::with_capacity(width);
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    csv_err(
                        path,
                        format!(
                            "non-numeric cell at data row {}, column {}: {field:?}",
                            offset + 1,
                            col + 1
                        ),
                    )
                })?;
            if Some(col) == label_column {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(csv_err(
                        path,
                        format!(
                            "label at data row {} must be a non-negative integer, got {field:?}",
                            offset + 1
                        ),
                    ));
                }
                labels.push(value as usize);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }

    let matrix = Matrix::from_rows(&rows);
    let x = match layout {
        Layout::SamplesAsRows => matrix.transpose(),
        Layout::SamplesAsColumns => matrix,
    };
    let feature_names = feature_names.map(|names| {
        names
            .into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_column)
            .map(|(_, name)| name)
            .collect()
    });
    Ok(Dataset {
        x,
        truth: if labels.is_empty() { None } else { Some(labels) },
        feature_names,
        provenance: Provenance {
            source: format!("csv:{}", path.display()),
            ..Default::default()
        },
    })
}

/// Writes the dataset back out with samples as rows, formatting floats in
/// shortest round-trip form so a reload is bitwise identical.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    if let Some(names) = &ds.feature_names {
        writeln!(out, "{}", names.join(",")).map_err(io_err)?;
    }
    let (d, n) = ds.dims();
    for j in 0..n {
        let row: Vec<String> = (0..d).map(|i| format!("{}", ds.x[(i, j)])).collect();
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Reads a label file: one label per line, or `index,label` rows; optional
/// header and `#` comments are skipped.
pub fn load_labels_csv(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut labels = Vec::new();
    let mut seen_data = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let cell = match fields.len() {
            1 => fields[0],
            2 => fields[1],
            _ => {
                return Err(csv_err(
                    path,
                    format!("line {}: expected 1 or 2 columns", lineno + 1),
                ))
            }
        };
        match cell.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.fract() == 0.0 => {
                labels.push(v as usize);
                seen_data = true;
            }
            Ok(_) => {
                return Err(csv_err(
                    path,
                    format!("line {}: label must be a non-negative integer", lineno + 1),
                ))
            }
            // The first non-comment line may be a header.
            Err(_) if !seen_data && labels.is_empty() => continue,
            Err(_) => {
                return Err(csv_err(
                    path,
                    format!("line {}: non-numeric label {cell:?}", lineno + 1),
                ))
            }
        }
    }
    if labels.is_empty() {
        return Err(csv_err(path, "no labels found"));
    }
    Ok(labels)
}

/// Z-scores every feature (population variance). Constant features are
/// zeroed and noted rather than rejected.
pub fn standardize(ds: &Dataset) -> Dataset {
    let (d, n) = ds.dims();
    let mut out = ds.clone();
    let mut constant = Vec::new();
    for i in 0..d {
        let mean = ds.x.row(i).iter().sum::<f64>() / n as f64;
        let var = ds.x.row(i).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            for j in 0..n {
                out.x[(i, j)] = 0.0;
            }
            constant.push(i);
        } else {
            for j in 0..n {
                out.x[(i, j)] = (ds.x[(i, j)] - mean) / sd;
            }
        }
    }
    if !constant.is_empty() {
        log::warn!("standardize zeroed {} constant feature(s)", constant.len());
        out.provenance
            .notes
            .push(format!("standardize: constant features zeroed {constant:?}"));
    } else {
        out.provenance.notes.push("standardize".into());
    }
    out
}

/// Gaussian clusters with means `separation` apart inside a random
/// `subspace_dim`-dimensional subspace of the ambient `d` dimensions;
/// isotropic noise `sigma` everywhere. Samples are grouped by class.
pub fn synth_clusters(
    c: usize,
    n_per_class: usize,
    d: usize,
    subspace_dim: usize,
    separation: f64,
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if c == 0 || n_per_class == 0 {
        return Err(Error::InvalidParam {
            name: "c/n_per_class",
            detail: "need at least one class and one sample per class".into(),
        });
    }
    if subspace_dim == 0 || subspace_dim > d {
        return Err(Error::InvalidParam {
            name: "subspace_dim",
            detail: format!("{subspace_dim} outside [1, {d}]"),
        });
    }
    let basis = random_orthonormal(d, subspace_dim, seed ^ 0x5EED_BA5E)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Class means in subspace coordinates: a centered simplex has all
    // pairwise distances equal, and fits whenever c <= subspace_dim.
    let mut means_sub = Vec::with_capacity(c);
    if c == 1 {
        means_sub.push(vec![0.0; subspace_dim]);
    } else if c <= subspace_dim {
        let scale = separation / std::f64::consts::SQRT_2;
        for k in 0..c {
            let mut v = vec![0.0; subspace_dim];
            for (j, item) in v.iter_mut().enumerate().take(c) {
                let e = if j == k { 1.0 } else { 0.0 };
                *item = (e - 1.0 / c as f64) * scale;
            }
            means_sub.push(v);
        }
    } else {
        // Too many classes for a simplex: random directions rescaled so the
        // closest pair sits `separation` apart.
        let normal = StandardNormal;
        let raw: Vec<Vec<f64>> = (0..c)
            .map(|_| (0..subspace_dim).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let mut min_dist = f64::INFINITY;
        for a in 0..c {
            for b in (a + 1)..c {
                let dist = raw[a]
                    .iter()
                    .zip(&raw[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                min_dist = min_dist.min(dist);
            }
        }
        if min_dist <= 0.0 {
            return Err(Error::InvalidParam {
                name: "seed",
                detail: "degenerate random means; pick another seed".into(),
            });
        }
        let scale = separation / min_dist;
        means_sub.extend(raw.into_iter().map(|v| v.iter().map(|x| x * scale).collect()));
    }

    let n = c * n_per_class;
    let mut x = Matrix::zeros(d, n);
    let mut truth = Vec::with_capacity(n);
    let normal = StandardNormal;
    for (k, mean_sub) in means_sub.iter().enumerate() {
        // Embed the subspace mean into ambient coordinates.
        let mut mean_full = vec![0.0; d];
        for (j, &coeff) in mean_sub.iter().enumerate() {
            for (i, m) in mean_full.iter_mut().enumerate() {
                *m += basis[(i, j)] * coeff;
            }
        }
        for s in 0..n_per_class {
            let col = k * n_per_class + s;
            for (i, &m) in mean_full.iter().enumerate() {
                let noise: f64 = normal.sample(&mut rng);
                x[(i, col)] = m + sigma * noise;
            }
            truth.push(k);
        }
    }
    Ok(Dataset {
        x,
        truth: Some(truth),
        feature_names: None,
        provenance: Provenance {
            source: format!(
                "synth(c={c}, n_per_class={n_per_class}, d={d}, subspace_dim={subspace_dim}, \
                 separation={separation}, sigma={sigma}, seed={seed})"
            ),
            ..Default::default()
        },
    })
}

fn choose_indices(total: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // Partial Fisher-Yates.
    let mut pool: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = rng.gen_range(i..total);
        pool.swap(i, j);
    }
    let mut chosen = pool[..count].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Multiplies a seeded random fraction of the data by 1.5. Whole samples by
/// default; entrywise behind [`CorruptionScope::Entries`]. The corrupted
/// index set is recorded in the provenance.
pub fn inject_outliers(ds: &Dataset, spec: &CorruptionSpec) -> Result<Dataset> {
    let fraction = match spec.kind {
        CorruptionKind::Outliers { fraction } => fraction,
        CorruptionKind::SnrNoise { .. } => {
            return Err(Error::InvalidParam {
                name: "spec",
                detail: "inject_outliers needs an outlier spec".into(),
            })
        }
    };
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParam {
            name: "fraction",
            detail: format!("{fraction} outside [0, 1]"),
        });
    }
    let (d, n) = ds.dims();
    let mut out = ds.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.scope {
        CorruptionScope::Samples => {
            let count = (fraction * n as f64).round() as usize;
            let chosen = choose_indices(n, count, &mut rng);
            for &j in &chosen {
                for i in 0..d {
                    out.x[(i, j)] *= OUTLIER_FACTOR;
                }
            }
            out.provenance.notes.push(format!(
                "outliers: fraction={fraction}, scope=samples, seed={}, corrupted={count}",
                spec.seed
            ));
            out.provenance.corrupted_samples = chosen;
        }
        CorruptionScope::Entries => {
            let count = (fraction * (n * d) as f64).round() as usize;
            let chosen = choose_indices(n * d, count, &mut rng);
            let coords: Vec<(usize, usize)> = chosen.iter().map(|&e| (e / n, e % n)).collect();
            for &(i, j) in &coords {
                out.x[(i, j)] *= OUTLIER_FACTOR;
            }
            out.provenance.notes.push(format!(
                "outliers: fraction={fraction}, scope=entries, seed={}, corrupted={count}",
                spec.seed
            ));
            out.provenance.corrupted_entries = coords;
        }
    }
    Ok(out)
}

/// Adds zero-mean Gaussian noise with power `signal_power / 10^(snr_db/10)`.
pub fn inject_noise_snr(ds: &Dataset, snr_db: f64, seed: u64) -> Result<Dataset> {
    let (d, n) = ds.dims();
    let signal_power = ds.x.data().iter().map(|v| v * v).sum::<f64>() / (d * n) as f64;
    if signal_power <= 0.0 {
        return Err(Error::InvalidParam {
            name: "x",
            detail: "zero-power signal cannot define an SNR".into(),
        });
    }
    let noise_std = (signal_power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut out = ds.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    for i in 0..d {
        for j in 0..n {
            let noise: f64 = normal.sample(&mut rng);
            out.x[(i, j)] += noise_std * noise;
        }
    }
    out.provenance
        .notes
        .push(format!("noise: snr_db={snr_db}, seed={seed}"));
    Ok(out)
}

/// Cuts a 1-D signal into overlapping windows; each window becomes one
/// sample (column). Window count is `floor((len − width)/stride) + 1`.
pub fn sliding_window(signal: &[f64], width: usize, stride: usize) -> Result<Dataset> {
    if width == 0 || stride == 0 {
        return Err(Error::InvalidParam {
            name: "width/stride",
            detail: "must be positive".into(),
        });
    }
    if width > signal.len() {
        return Err(Error::InvalidParam {
            name: "width",
            detail: format!("window {width} exceeds signal length {}", signal.len()),
        });
    }
    let count = (signal.len() - width) / stride + 1;
    let x = Matrix::from_fn(width, count, |i, j| signal[j * stride + i]);
    Ok(Dataset {
        x,
        truth: None,
        feature_names: None,
        provenance: Provenance {
            source: format!("sliding_window(len={}, width={width}, stride={stride})", signal.len()),
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{center_columns, sym_eig};

    fn tempdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "rudp-data-test-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn load_csv_transposes_sample_rows() {
        let dir = tempdir();
        let path = dir.join("rows.csv");
        std::fs::write(&path, "1,2\n3,4\n5,6\n").unwrap();
        let ds = load_csv(&path, Layout::SamplesAsRows, None).unwrap();
        assert_eq!(ds.dims(), (2, 3));
        assert_eq!(ds.x[(0, 2)], 5.0);
        let ds = load_csv(&path, Layout::SamplesAsColumns, None).unwrap();
        assert_eq!(ds.dims(), (3, 2));
    }

    #[test]
    fn load_csv_extracts_labels_and_header() {
        let dir = tempdir();
        let path = dir.join("labeled.csv");
        std::fs::write(&path, "a,b,class\n1.5,2.5,0\n3.5,4.5,1\n5.5,6.5,2\n").unwrap();
        let ds = load_csv(&path, Layout::SamplesAsRows, Some(2)).unwrap();
        assert_eq!(ds.dims(), (2, 3));
        assert_eq!(ds.truth.as_deref(), Some(&[0, 1, 2][..]));
        assert_eq!(
            ds.feature_names.as_deref(),
            Some(&["a".to_string(), "b".to_string()][..])
        );
    }

    #[test]
    fn load_csv_reports_bad_cells() {
        let dir = tempdir();
        let bad = dir.join("bad.csv");
        std::fs::write(&bad, "1,2\n3,oops\n").unwrap();
        let err = load_csv(&bad, Layout::SamplesAsRows, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("column 2"), "{msg}");

        let ragged = dir.join("ragged.csv");
        std::fs::write(&ragged, "1,2\n3\n").unwrap();
        assert!(load_csv(&ragged, Layout::SamplesAsRows, None).is_err());

        let empty = dir.join("empty.csv");
        std::fs::write(&empty, "").unwrap();
        assert!(load_csv(&empty, Layout::SamplesAsRows, None).is_err());
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let ds = synth_clusters(2, 5, 4, 2, 3.0, 0.7, 11).unwrap();
        let dir = tempdir();
        let path = dir.join("roundtrip.csv");
        save_csv(&ds, &path).unwrap();
        let back = load_csv(&path, Layout::SamplesAsRows, None).unwrap();
        assert_eq!(ds.x.data(), back.x.data());
    }

    #[test]
    fn labels_file_round_trip_and_formats() {
        let dir = tempdir();
        let path = dir.join("labels.csv");
        std::fs::write(&path, "index,label\n0,2\n1,0\n2,1\n").unwrap();
        assert_eq!(load_labels_csv(&path).unwrap(), vec![2, 0, 1]);
        let bare = dir.join("bare.csv");
        std::fs::write(&bare, "2\n0\n1\n").unwrap();
        assert_eq!(load_labels_csv(&bare).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn standardize_examples() {
        let ds = Dataset {
            x: Matrix::from_rows(&[vec![1.0, 3.0]]),
            truth: None,
            feature_names: None,
            provenance: Provenance::default(),
        };
        let out = standardize(&ds);
        assert_eq!(out.x[(0, 0)], -1.0);
        assert_eq!(out.x[(0, 1)], 1.0);

        // Idempotence.
        let again = standardize(&out);
        assert!(again.x.sub(&out.x).frob_norm() <= 1e-12);
    }

    #[test]
    fn standardize_hits_zero_mean_unit_variance() {
        let ds = synth_clusters(3, 10, 6, 3, 4.0, 1.0, 3).unwrap();
        let out = standardize(&ds);
        let (d, n) = out.dims();
        for i in 0..d {
            let mean = out.x.row(i).iter().sum::<f64>() / n as f64;
            let var = out.x.row(i).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 1e-10);
            assert!((var - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn standardize_zeroes_constant_features() {
        let mut x = Matrix::from_fn(3, 5, |i, j| (i * 5 + j) as f64);
        for j in 0..5 {
            x[(1, j)] = 42.0;
        }
        let ds = Dataset {
            x,
            truth: None,
            feature_names: None,
            provenance: Provenance::default(),
        };
        let out = standardize(&ds);
        for j in 0..5 {
            assert_eq!(out.x[(1, j)], 0.0);
        }
        assert!(out.provenance.notes[0].contains("constant"));
    }

    #[test]
    fn synth_clusters_geometry() {
        let clean = synth_clusters(3, 4, 8, 3, 5.0, 0.0, 7).unwrap();
        // sigma = 0: within-class distance zero, between-class = separation.
        for k in 0..3 {
            let base = k * 4;
            for s in 1..4 {
                let mut d2 = 0.0;
                for i in 0..8 {
                    d2 += (clean.x[(i, base)] - clean.x[(i, base + s)]).powi(2);
                }
                assert!(d2 <= 1e-20);
            }
        }
        let mut between = 0.0;
        for i in 0..8 {
            between += (clean.x[(i, 0)] - clean.x[(i, 4)]).powi(2);
        }
        assert!((between.sqrt() - 5.0).abs() <= 1e-9);

        let single = synth_clusters(1, 6, 4, 2, 1.0, 0.5, 9).unwrap();
        assert!(single.truth.unwrap().iter().all(|&t| t == 0));
    }

    #[test]
    fn synth_clusters_rank_bound_at_zero_sigma() {
        let ds = synth_clusters(4, 5, 10, 3, 2.0, 0.0, 13).unwrap();
        let xc = center_columns(&ds.x);
        let cov = xc.mul(&xc.transpose());
        let eig = sym_eig(&cov).unwrap();
        for &v in &eig.eigenvalues[3..] {
            assert!(v.abs() <= 1e-10 * eig.eigenvalues[0].max(1.0));
        }
    }

    #[test]
    fn synth_clusters_is_reproducible() {
        let a = synth_clusters(3, 7, 12, 4, 6.0, 1.0, 99).unwrap();
        let b = synth_clusters(3, 7, 12, 4, 6.0, 1.0, 99).unwrap();
        assert_eq!(a.x.data(), b.x.data());
    }

    #[test]
    fn synth_separation_supports_kmeans_oracle() {
        // separation/sigma = 20: raw k-means must nail it across seeds.
        for seed in 0..10 {
            let ds = synth_clusters(3, 15, 10, 3, 10.0, 0.5, 500 + seed).unwrap();
            let res =
                crate::baselines::kmeans(&ds.x.transpose(), 3, 1000 + seed, 100, 4).unwrap();
            let acc =
                crate::metrics::hungarian_accuracy(&res.labels, ds.truth.as_ref().unwrap())
                    .unwrap();
            assert!(acc >= 0.99, "seed {seed}: {acc}");
        }
    }

    #[test]
    fn outliers_scale_exactly_the_reported_samples() {
        let ds = synth_clusters(2, 10, 5, 2, 4.0, 1.0, 21).unwrap();
        let spec = CorruptionSpec {
            kind: CorruptionKind::Outliers { fraction: 0.25 },
            scope: CorruptionScope::Samples,
            seed: 5,
        };
        let out = inject_outliers(&ds, &spec).unwrap();
        let chosen = &out.provenance.corrupted_samples;
        assert_eq!(chosen.len(), 5); // round(0.25 * 20)
        for j in 0..20 {
            for i in 0..5 {
                let expect = if chosen.contains(&j) {
                    ds.x[(i, j)] * 1.5
                } else {
                    ds.x[(i, j)]
                };
                assert_eq!(out.x[(i, j)], expect);
            }
        }

        // fraction = 0 leaves the data untouched.
        let spec0 = CorruptionSpec {
            kind: CorruptionKind::Outliers { fraction: 0.0 },
            scope: CorruptionScope::Samples,
            seed: 5,
        };
        let same = inject_outliers(&ds, &spec0).unwrap();
        assert_eq!(same.x.data(), ds.x.data());

        let bad = CorruptionSpec {
            kind: CorruptionKind::Outliers { fraction: 1.5 },
            scope: CorruptionScope::Samples,
            seed: 5,
        };
        assert!(inject_outliers(&ds, &bad).is_err());
    }

    #[test]
    fn outlier_factor_matches_protocol() {
        let ds = Dataset {
            x: Matrix::from_rows(&[vec![2.0]]),
            truth: None,
            feature_names: None,
            provenance: Provenance::default(),
        };
        let spec = CorruptionSpec {
            kind: CorruptionKind::Outliers { fraction: 1.0 },
            scope: CorruptionScope::Entries,
            seed: 0,
        };
        let out = inject_outliers(&ds, &spec).unwrap();
        assert_eq!(out.x[(0, 0)], 3.0);
    }

    #[test]
    fn outlier_count_rounds() {
        let ds = synth_clusters(3, 480, 4, 2, 5.0, 1.0, 31).unwrap();
        let spec = CorruptionSpec {
            kind: CorruptionKind::Outliers { fraction: 0.05 },
            scope: CorruptionScope::Samples,
            seed: 7,
        };
        let out = inject_outliers(&ds, &spec).unwrap();
        assert_eq!(out.provenance.corrupted_samples.len(), 72);
    }

    #[test]
    fn snr_injection_hits_target_power() {
        let ds = synth_clusters(2, 500, 100, 5, 5.0, 1.0, 41).unwrap();
        let noisy = inject_noise_snr(&ds, 10.0, 3).unwrap();
        let (d, n) = ds.dims();
        let signal: f64 = ds.x.data().iter().map(|v| v * v).sum::<f64>() / (d * n) as f64;
        let noise: f64 = noisy
            .x
            .data()
            .iter()
            .zip(ds.x.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / (d * n) as f64;
        let realized_db = 10.0 * (signal / noise).log10();
        assert!((realized_db - 10.0).abs() <= 0.5, "{realized_db}");
    }

    #[test]
    fn snr_examples() {
        let ds = synth_clusters(2, 200, 50, 4, 5.0, 1.0, 43).unwrap();
        let zero_db = inject_noise_snr(&ds, 0.0, 5).unwrap();
        let (d, n) = ds.dims();
        let signal: f64 = ds.x.data().iter().map(|v| v * v).sum::<f64>() / (d * n) as f64;
        let noise: f64 = zero_db
            .x
            .data()
            .iter()
            .zip(ds.x.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / (d * n) as f64;
        assert!((10.0 * (signal / noise).log10()).abs() <= 0.5);

        // Effectively noiseless at 200 dB.
        let clean = inject_noise_snr(&ds, 200.0, 5).unwrap();
        let scale = ds.x.data().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let max_dev = clean
            .x
            .data()
            .iter()
            .zip(ds.x.data())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(max_dev <= 1e-6 * scale);

        let silent = Dataset {
            x: Matrix::zeros(3, 3),
            truth: None,
            feature_names: None,
            provenance: Provenance::default(),
        };
        assert!(inject_noise_snr(&silent, 10.0, 1).is_err());
    }

    #[test]
    fn sliding_window_counts_and_round_trip() {
        let signal: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let one = sliding_window(&signal, 1000, 1).unwrap();
        assert_eq!(one.dims(), (1000, 1));

        let ten: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ds = sliding_window(&ten, 4, 2).unwrap();
        assert_eq!(ds.dims(), (4, 4));
        assert_eq!(ds.x[(0, 3)], 6.0);

        // stride == width partitions the signal exactly.
        let parts = sliding_window(&ten, 5, 5).unwrap();
        let mut rebuilt = Vec::new();
        for j in 0..parts.dims().1 {
            rebuilt.extend(parts.x.col(j));
        }
        assert_eq!(rebuilt, ten);

        assert!(sliding_window(&ten, 11, 1).is_err());
    }
}
