//! Run manifests and CSV emission.
//!
//! The manifest is the serialized configuration preceded by comment lines
//! naming the version, subcommand and wall-clock time. Because comments are
//! ignored by the parser, `--config <subcommand>.manifest.ini` repeats the
//! run. The hash leaves out the timestamp and the output directory, so
//! identical runs carry identical hashes and byte-identical CSV files.

use crate::config::RunConfig;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Resolved SI configuration.
    pub config: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, cfg: &RunConfig) -> Self {
        RunManifest {
            version: VERSION.to_string(),
            subcommand: subcommand.to_string(),
            seed: cfg.seed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            config: cfg.serialize(),
        }
    }

    fn body(&self) -> String {
        format!(
            "# version = {}\n# subcommand = {}\n# seed = {}\n{}",
            self.version, self.subcommand, self.seed, self.config
        )
    }

    /// SHA-256 of the manifest without the timestamp and the output
    /// directory, neither of which affects the results.
    pub fn hash(&self) -> String {
        let body: String = self
            .body()
            .lines()
            .filter(|l| !l.starts_with("out = "))
            .flat_map(|l| [l, "\n"])
            .collect();
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    pub fn render(&self) -> String {
        format!(
            "# rfsweep run manifest\n# manifest_sha256 = {}\n# timestamp = {}\n{}",
            self.hash(),
            self.timestamp,
            self.body()
        )
    }
}

/// File name of the manifest written by `subcommand`.
pub fn manifest_file(subcommand: &str) -> String {
    format!("{subcommand}.manifest.ini")
}

/// Writes output files into one directory, each headed by the manifest hash.
pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    pub written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path, manifest: &RunManifest) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let mut out = OutputDir {
            dir: dir.to_path_buf(),
            hash: manifest.hash(),
            written: Vec::new(),
        };
        out.write_raw(&manifest_file(&manifest.subcommand), &manifest.render())?;
        Ok(out)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write_raw(&mut self, name: &str, text: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    /// `echo` lines are written as `# key=value` after the hash line.
    pub fn csv(&mut self, name: &str, echo: &[(&str, String)], columns: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut s = format!("# manifest_sha256={}\n", self.hash);
        for (k, v) in echo {
            let _ = writeln!(s, "# {k}={v}");
        }
        s.push_str(&columns.join(","));
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        self.write_raw(name, &s)
    }
}

/// Shortest round-trip scientific formatting used in every CSV cell.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}
