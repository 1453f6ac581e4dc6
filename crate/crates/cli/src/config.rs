//! Resolved run configurations and the flat key/value config-file format.
//! Flags override file values; file values override defaults.

use anyhow::{bail, Context, Result};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// `key = value` lines; `#` starts a comment.
pub fn load_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected key = value, got {raw:?}",
                path.display(),
                lineno + 1
            );
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Flag value if given, else the config-file value, else `None`.
pub fn merge<T: FromStr>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(raw) => match raw.parse::<T>() {
            Ok(v) => Ok(Some(v)),
            Err(e) => bail!("config key {key}: cannot parse {raw:?}: {e}"),
        },
    }
}

/// Comma-separated list with the same merge semantics.
pub fn merge_list<T: FromStr>(
    flag: Option<String>,
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<Vec<T>>>
where
    T::Err: std::fmt::Display,
{
    let raw = match flag {
        Some(v) => Some(v),
        None => file.get(key).cloned(),
    };
    let Some(raw) = raw else {
        return Ok(None);
    };
    let mut out = Vec::new();
    for item in raw.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        match item.parse::<T>() {
            Ok(v) => out.push(v),
            Err(e) => bail!("{key}: cannot parse list item {item:?}: {e}"),
        }
    }
    if out.is_empty() {
        bail!("{key}: empty list");
    }
    Ok(Some(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutOpt {
    Rows,
    Columns,
}

impl FromStr for LayoutOpt {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rows" => Ok(LayoutOpt::Rows),
            "columns" => Ok(LayoutOpt::Columns),
            other => Err(format!("layout must be rows or columns, got {other:?}")),
        }
    }
}

impl LayoutOpt {
    pub fn as_layout(self) -> rudp::data::Layout {
        match self {
            LayoutOpt::Rows => rudp::data::Layout::SamplesAsRows,
            LayoutOpt::Columns => rudp::data::Layout::SamplesAsColumns,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayoutOpt::Rows => "rows",
            LayoutOpt::Columns => "columns",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnOff {
    On,
    Off,
}

impl FromStr for OnOff {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "on" => Ok(OnOff::On),
            "off" => Ok(OnOff::Off),
            other => Err(format!("expected on or off, got {other:?}")),
        }
    }
}

impl OnOff {
    pub fn is_on(self) -> bool {
        self == OnOff::On
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OnOff::On => "on",
            OnOff::Off => "off",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Kmeans,
    Pca,
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "kmeans" => Ok(Baseline::Kmeans),
            "pca" => Ok(Baseline::Pca),
            other => Err(format!("unknown baseline {other:?} (kmeans, pca)")),
        }
    }
}

impl Baseline {
    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::Kmeans => "kmeans",
            Baseline::Pca => "pca",
        }
    }
}

/// Where the benchmark and fit commands get their data.
#[derive(Debug, Clone)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        layout: LayoutOpt,
        label_col: Option<usize>,
    },
    Synth {
        clusters: usize,
        per_class: usize,
        dim: usize,
        subspace_dim: usize,
        separation: f64,
        sigma: f64,
    },
}

impl DataSource {
    pub fn describe(&self) -> String {
        match self {
            DataSource::Csv {
                path,
                layout,
                label_col,
            } => format!(
                "data={} layout={} label_col={}",
                path.display(),
                layout.as_str(),
                label_col.map_or("none".to_string(), |c| c.to_string())
            ),
            DataSource::Synth {
                clusters,
                per_class,
                dim,
                subspace_dim,
                separation,
                sigma,
            } => format!(
                "synth clusters={clusters} per_class={per_class} dim={dim} \
                 subspace_dim={subspace_dim} separation={separation} sigma={sigma}"
            ),
        }
    }

    /// Loads or generates the dataset. Synthetic sources take the given
    /// seed; file sources ignore it.
    pub fn realize(&self, seed: u64) -> Result<rudp::data::Dataset> {
        match self {
            DataSource::Csv {
                path,
                layout,
                label_col,
            } => rudp::data::load_csv(path, layout.as_layout(), *label_col)
                .with_context(|| format!("loading {}", path.display())),
            DataSource::Synth {
                clusters,
                per_class,
                dim,
                subspace_dim,
                separation,
                sigma,
            } => rudp::data::synth_clusters(
                *clusters,
                *per_class,
                *dim,
                *subspace_dim,
                *separation,
                *sigma,
                seed,
            )
            .context("generating synthetic data"),
        }
    }
}
