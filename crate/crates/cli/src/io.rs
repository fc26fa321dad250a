use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use monfer::observables::EnsembleStatistic;
use monfer::temporal::LagCurve;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const UNITS: &str = "J = 1: times in 1/J, rates and energies in J, lengths in lattice sites";
pub const MANIFEST: &str = "manifest.json";

/// One row of a curve file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub abscissa: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

pub fn rows_from_stats(x: &[f64], s: &[EnsembleStatistic]) -> Vec<Row> {
    x.iter()
        .zip(s)
        .map(|(&abscissa, s)| Row {
            abscissa,
            mean: s.mean,
            stderr: s.stderr,
            n_samples: s.n_samples,
        })
        .collect()
}

pub fn rows_from_lag(c: &LagCurve) -> Vec<Row> {
    (0..c.lags.len())
        .map(|i| Row {
            abscissa: c.lags[i],
            mean: c.mean[i],
            stderr: c.stderr[i],
            n_samples: c.n_samples,
        })
        .collect()
}

/// Exact values: zero error, no samples.
pub fn rows_exact(x: &[f64], y: &[f64]) -> Vec<Row> {
    x.iter()
        .zip(y)
        .map(|(&abscissa, &mean)| Row {
            abscissa,
            mean,
            stderr: 0.0,
            n_samples: 0,
        })
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))
}

pub fn csv_bytes(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?)
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<Row>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    /// What the `abscissa` column holds.
    pub abscissa: String,
    pub mean: String,
    pub sha256: String,
}

/// Collects curve files and writes them with their hashes.
pub struct Output {
    dir: PathBuf,
    pub files: Vec<FileEntry>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn curve(&mut self, name: &str, abscissa: &str, mean: &str, rows: &[Row]) -> Result<()> {
        let bytes = csv_bytes(rows)?;
        write_atomic(&self.dir.join(name), &bytes)?;
        self.files.push(FileEntry {
            name: name.into(),
            abscissa: abscissa.into(),
            mean: mean.into(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        write_atomic(&self.dir.join(name), &bytes)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
