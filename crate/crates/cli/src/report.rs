//! Machine-readable outputs: the JSON stats line of `build` and the CSV row
//! of `probe`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Stats printed by `build` and saved next to the index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub index: String,
    pub dataset: String,
    pub epsilon: Option<u64>,
    pub num_keys: u64,
    pub spline_points: Option<usize>,
    /// `binary_search`, `radix_table` or `cht`.
    pub choice: String,
    pub r: Option<u32>,
    pub delta: Option<u32>,
    pub predicted_lambda: Option<f64>,
    /// Index size: spline knots plus subindex.
    pub bytes: usize,
    /// Wall-clock build time, tuning included.
    pub build_ns: u64,
}

pub fn sidecar_path(index: &Path) -> PathBuf {
    let mut name = index.as_os_str().to_owned();
    name.push(".stats.json");
    PathBuf::from(name)
}

impl BuildReport {
    pub fn write_sidecar(&self, index: &Path) -> Result<()> {
        let path = sidecar_path(index);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }

    pub fn read_sidecar(index: &Path) -> Result<Option<Self>> {
        let path = sidecar_path(index);
        if !path.exists() {
            return Ok(None);
        }
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let report =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Some(report))
    }
}

pub const CSV_HEADER: &str =
    "dataset,index,epsilon,r,delta,bytes,build_ns,median_lookup_ns,p99_lookup_ns";

/// One benchmark result; empty fields mean "not applicable" or "unknown".
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub dataset: String,
    pub index: String,
    pub epsilon: Option<u64>,
    pub r: Option<u32>,
    pub delta: Option<u32>,
    pub bytes: usize,
    pub build_ns: Option<u64>,
    pub median_lookup_ns: f64,
    pub p99_lookup_ns: f64,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.2},{:.2}",
            field(&self.dataset),
            field(&self.index),
            opt(self.epsilon),
            opt(self.r),
            opt(self.delta),
            self.bytes,
            opt(self.build_ns),
            self.median_lookup_ns,
            self.p99_lookup_ns
        )
    }

    /// Appends the row, writing the header first if the file is new or empty.
    pub fn append_to(&self, path: &Path) -> Result<()> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        let empty = file.metadata()?.len() == 0;
        let mut text = String::new();
        if empty {
            text.push_str(CSV_HEADER);
            text.push('\n');
        }
        text.push_str(&self.to_line());
        text.push('\n');
        file.write_all(text.as_bytes())
            .with_context(|| format!("writing {}", path.display()))
    }
}
