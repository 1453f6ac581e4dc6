//! File emission helpers. Every file carries the resolved configuration as
//! `#`-prefixed comment lines so any output can be traced back to its run.

use anyhow::{Context, Result};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutDir {
    root: PathBuf,
    config_echo: Vec<String>,
}

impl OutDir {
    /// Creates the directory (and parents) and remembers the config echo.
    pub fn new(root: &Path, config_echo: Vec<String>) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            config_echo,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn open(&self, name: &str) -> Result<std::io::BufWriter<std::fs::File>> {
        let path = self.path(name);
        let file = std::fs::File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        Ok(std::io::BufWriter::new(file))
    }

    /// CSV file: config echo as comments, then an optional header, then rows.
    pub fn write_csv(&self, name: &str, header: Option<&str>, rows: &[String]) -> Result<()> {
        let mut out = self.open(name)?;
        for line in &self.config_echo {
            writeln!(out, "# {line}")?;
        }
        if let Some(header) = header {
            writeln!(out, "{header}")?;
        }
        for row in rows {
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    /// Flat key/value text file; the config echo goes in as ordinary keys
    /// under a comment banner.
    pub fn write_kv(&self, name: &str, pairs: &[(String, String)]) -> Result<()> {
        let mut out = self.open(name)?;
        for line in &self.config_echo {
            writeln!(out, "# {line}")?;
        }
        for (key, value) in pairs {
            writeln!(out, "{key} = {value}")?;
        }
        Ok(())
    }
}

/// Shortest round-trip float formatting; equal values always print equal
/// strings, which is what makes reruns byte-comparable.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
