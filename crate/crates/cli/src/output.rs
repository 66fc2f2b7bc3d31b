//! Artifact writers: CSV/JSON dumps, two-column plot series, run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use zeta_recurrence::eulerfit::FitStep;
use zeta_recurrence::recurrence::{fmt_real, BestHit};

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// Two-column text series with a `# x y` header line.
pub fn series(columns: [&str; 2], rows: &[[f64; 2]]) -> String {
    let mut out = format!("# {} {}\n", columns[0], columns[1]);
    for r in rows {
        let _ = writeln!(out, "{} {}", fmt_real(r[0]), fmt_real(r[1]));
    }
    out
}

pub fn parse_series(text: &str) -> Result<(Vec<String>, Vec<[f64; 2]>)> {
    let mut lines = text.lines();
    let Some(header) = lines.next().and_then(|h| h.strip_prefix('#')) else {
        bail!("series file lacks a '#' header");
    };
    let columns = header.split_whitespace().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad series line {}", i + 2))?;
        if v.len() != 2 {
            bail!("series line {} has {} columns", i + 2, v.len());
        }
        rows.push([v[0], v[1]]);
    }
    Ok((columns, rows))
}

/// `(step, residual_norm)` for accepted fit steps.
pub fn fit_series(history: &[FitStep]) -> String {
    let rows: Vec<[f64; 2]> =
        history.iter().filter(|h| h.accepted).map(|h| [h.step as f64, h.residual_norm]).collect();
    series(["step", "residual_norm"], &rows)
}

pub fn hits_csv(best: &[BestHit]) -> String {
    let mut out = String::from("tau,error,error_bound,source\n");
    for h in best {
        let _ = writeln!(out, "{},{},{},{}", fmt_real(h.tau), fmt_real(h.error), fmt_real(h.error_bound), h.source);
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: String,
    pub mode: String,
    pub config_path: Option<String>,
    pub config_file_sha256: Option<String>,
    /// Hash of the effective configuration after overrides.
    pub config_sha256: String,
    pub config: std::collections::BTreeMap<String, String>,
    pub seed: u64,
    pub workers: usize,
    pub status: String,
    pub wall_time_s: Option<f64>,
    pub outputs: Vec<String>,
    pub error: Option<String>,
}

impl Manifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write(dir, "manifest.json", &(text + "\n"))?;
        Ok(())
    }
}
