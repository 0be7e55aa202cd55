//! Artifact files and the per-command manifest.

use crate::config::RunConfig;
use crate::Failure;
use renorm_core::arclab::ArcSample;
use renorm_core::artifact::{to_json, SCHEMA_VERSION};
use renorm_core::goldenrot::{Partition, PieceKind};
use renorm_core::renorm2d::Point;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct RotationRow {
    pub n: usize,
    pub j_count: u64,
    pub q_2n1: u64,
    pub i_count: u64,
    pub q_2n: u64,
    pub refine_ok: bool,
    pub short_length: f64,
    pub equidist_err_x: f64,
    pub equidist_err_sin5x: f64,
    /// `2θ⁻¹ s_n` (the bound for `M = 1`).
    pub equidist_bound_m1: f64,
}

#[derive(Serialize)]
struct ArcRow {
    t: f64,
    word: String,
    level: usize,
    x_re: f64,
    x_im: f64,
    y_re: f64,
    y_im: f64,
}

#[derive(Serialize)]
struct PointRow {
    x_re: f64,
    x_im: f64,
    y_re: f64,
    y_im: f64,
}

#[derive(Serialize)]
struct PartitionRow {
    level: usize,
    kind: &'static str,
    word: String,
    left: f64,
    right: f64,
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    config_sha256: String,
    config: &'a RunConfig,
    versions: Versions,
    wall_time_s: f64,
    outputs: Vec<FileEntry>,
}

#[derive(Serialize)]
struct Versions {
    renorm_core: &'static str,
    renorm_cli: &'static str,
}

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Outputs {
    dir: PathBuf,
    written: Vec<FileEntry>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs { dir: dir.to_path_buf(), written: Vec::new() }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        std::fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        self.written.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let text = to_json(value)?;
        self.write(name, text.as_bytes())
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| io(&path, e))?;
        }
        let bytes = w.into_inner().map_err(|e| io(&path, e))?;
        self.write(name, &bytes)
    }

    pub fn rows_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), Failure> {
        self.csv(name, rows)
    }

    pub fn arc_csv(&mut self, name: &str, samples: &[ArcSample]) -> Result<(), Failure> {
        self.csv(
            name,
            samples.iter().map(|s| ArcRow {
                t: s.t,
                word: s.word.to_string(),
                level: s.level,
                x_re: s.point.0.re,
                x_im: s.point.0.im,
                y_re: s.point.1.re,
                y_im: s.point.1.im,
            }),
        )
    }

    pub fn points_csv(&mut self, name: &str, pts: &[Point]) -> Result<(), Failure> {
        self.csv(name, pts.iter().map(|p| PointRow { x_re: p.0.re, x_im: p.0.im, y_re: p.1.re, y_im: p.1.im }))
    }

    pub fn partition_csv(&mut self, name: &str, p: &Partition) -> Result<(), Failure> {
        self.csv(
            name,
            p.intervals.iter().map(|iv| PartitionRow {
                level: p.level,
                kind: match iv.kind {
                    PieceKind::P => "P",
                    PieceKind::Q => "Q",
                },
                word: iv.word.to_string(),
                left: iv.left,
                right: iv.right,
            }),
        )
    }

    /// `<command>.manifest.json`: config hash, versions, wall time and output hashes.
    pub fn manifest(mut self, command: &str, cfg: &RunConfig, wall_time_s: f64) -> Result<(), Failure> {
        let cfg_json = serde_json::to_string(cfg).map_err(|e| Failure::Config(e.to_string()))?;
        let m = Manifest {
            schema_version: SCHEMA_VERSION,
            command,
            config_sha256: sha256_hex(cfg_json.as_bytes()),
            config: cfg,
            versions: Versions { renorm_core: renorm_core_version(), renorm_cli: env!("CARGO_PKG_VERSION") },
            wall_time_s,
            outputs: std::mem::take(&mut self.written),
        };
        let name = format!("{command}.manifest.json");
        let text = to_json(&m)?;
        std::fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| io(&path, e))
    }
}

fn renorm_core_version() -> &'static str {
    renorm_core::VERSION
}
