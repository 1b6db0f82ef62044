//! Deterministic artifact writing: CSV with fixed 17-significant-digit
//! floats, JSON documents, and the per-run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// 17 significant digits; identical inputs produce identical bytes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text)
}

/// Collects artifact names and writes the run manifest at the end.
pub struct RunContext {
    pub out_dir: PathBuf,
    pub subcommand: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
    pub artifacts: Vec<String>,
    started: Instant,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    seed: u64,
    threads: Option<usize>,
    config: &'a serde_json::Value,
    config_sha256: String,
    wall_time_s: f64,
    artifacts: &'a [String],
}

impl RunContext {
    pub fn new(
        out_dir: PathBuf,
        subcommand: &str,
        seed: u64,
        threads: Option<usize>,
        config: serde_json::Value,
    ) -> std::io::Result<Self> {
        fs::create_dir_all(&out_dir)?;
        Ok(Self {
            out_dir,
            subcommand: subcommand.to_string(),
            seed,
            threads,
            config,
            artifacts: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out_dir.join(name)
    }

    pub fn finish(self) -> std::io::Result<()> {
        let canonical = serde_json::to_vec(&self.config).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        let manifest = Manifest {
            subcommand: &self.subcommand,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            threads: self.threads,
            config: &self.config,
            config_sha256: format!("{:x}", hasher.finalize()),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            artifacts: &self.artifacts,
        };
        write_json(&self.out_dir.join("manifest.json"), &manifest)
    }
}
