//! Output plumbing: stable-schema JSON/CSV emission and run manifests.

use crate::Result;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// FNV-1a 64-bit content hash used for input fingerprints in manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub config: std::collections::BTreeMap<String, String>,
    pub input_hashes: std::collections::BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
    pub passes: usize,
    pub failures: usize,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: 1,
            command: command.to_string(),
            config: Default::default(),
            input_hashes: Default::default(),
            outputs: Vec::new(),
            wall_time_seconds: 0.0,
            passes: 0,
            failures: 0,
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.input_hashes.insert(
            path.display().to_string(),
            format!("fnv1a64:{:016x}", fnv1a64(&bytes)),
        );
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Per-vertex scalar field as CSV (vertex id, value).
pub fn field_csv(values: &[f64]) -> String {
    let mut out = String::from("vertex,value\n");
    for (v, x) in values.iter().enumerate() {
        out.push_str(&format!("{v},{x}\n"));
    }
    out
}

/// Acceptance table CSV (criterion id, name, expected, measured,
/// tolerance, pass).
pub fn acceptance_csv(rows: &[crate::verify::Criterion]) -> String {
    let mut out = String::from("id,name,expected,measured,tolerance,pass\n");
    for c in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.id, c.name, c.expected, c.measured, c.tolerance, c.pass
        ));
    }
    out
}

pub fn output_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
