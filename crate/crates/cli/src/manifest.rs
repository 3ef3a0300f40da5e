//! Artifact writing and the run manifest.

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;
use crate::tasks::{Check, TaskError};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Hash of the effective configuration. The output directory is left out so
/// that the same scenario written to two places hashes the same.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let mut c = cfg.clone();
    c.output.dir = PathBuf::new();
    sha256(serde_json::to_string(&c).expect("config serialises").as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub config_hash: String,
}

/// Collects artifacts and notes for one run.
pub struct Sink {
    dir: PathBuf,
    hash: String,
    pub artifacts: Vec<Artifact>,
    pub notes: Map<String, Value>,
}

impl Sink {
    pub fn new(dir: &Path, hash: String) -> Result<Self, TaskError> {
        std::fs::create_dir_all(dir).map_err(|e| TaskError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Sink { dir: dir.to_path_buf(), hash, artifacts: Vec::new(), notes: Map::new() })
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), TaskError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| TaskError::Io(format!("{}: {e}", path.display())))?;
        self.artifacts.push(Artifact { path: name.into(), sha256: sha256(bytes), config_hash: self.hash.clone() });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), TaskError> {
        let mut v = v.clone();
        if let Value::Object(m) = &mut v {
            m.entry("config_hash").or_insert_with(|| json!(self.hash));
        }
        let text = serde_json::to_string_pretty(&v).expect("json serialises");
        self.write(name, text.as_bytes())
    }

    pub fn note(&mut self, key: &str, v: Value) {
        self.notes.insert(key.into(), v);
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub fn versions() -> Value {
    json!({ "qpwh-cli": env!("CARGO_PKG_VERSION"), "qpwh": qpwh::VERSION })
}

pub fn manifest(cfg: &ScenarioConfig, sink: &Sink, checks: &[Check], workers: usize) -> Value {
    json!({
        "task": cfg.task,
        "config_hash": sink.config_hash(),
        "config": cfg,
        "versions": versions(),
        "workers": workers,
        "deterministic": cfg.deterministic,
        "checks": checks,
        "passed": checks.iter().all(|c| c.passed),
        "artifacts": sink.artifacts,
        "notes": sink.notes,
    })
}
