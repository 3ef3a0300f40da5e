//! Scenario runner: configuration, task pipelines, artifacts with a manifest,
//! and grid comparison.
//!
//! Exit status of a run: 0 when every in-run check passes, 1 when a check
//! fails, 2 for configuration errors, 3 for numerical failures (a
//! `diagnostic.json` is written to the output directory).

pub mod compare;
pub mod config;
pub mod manifest;
pub mod tasks;

use serde_json::json;
use std::path::PathBuf;

pub use compare::{compare, compare_files, CompareError, DiffReport};
pub use config::{ConfigError, ScenarioConfig, Task};
pub use tasks::{Check, TaskError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub deterministic: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub code: i32,
    pub message: String,
    pub out_dir: Option<PathBuf>,
}

impl RunOutcome {
    fn config(e: ConfigError) -> Self {
        RunOutcome { code: EXIT_CONFIG, message: e.to_string(), out_dir: None }
    }
}

pub fn apply_overrides(mut cfg: ScenarioConfig, o: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    if let Some(t) = &o.task {
        cfg.task = Some(Task::parse(t)?);
    }
    if let Some(d) = &o.out {
        cfg.output.dir = d.clone();
    }
    if let Some(w) = o.workers {
        cfg.workers = w;
    }
    cfg.deterministic |= o.deterministic;
    Ok(cfg)
}

/// Validates and runs one scenario.
pub fn run(cfg: ScenarioConfig) -> RunOutcome {
    let (task, params) = match cfg.validate() {
        Ok(v) => v,
        Err(e) => return RunOutcome::config(e),
    };
    // a single worker fixes the summation order
    let workers = if cfg.deterministic { 1 } else { cfg.workers };
    let hash = manifest::config_hash(&cfg);
    let dir = cfg.output.dir.clone();
    let mut sink = match manifest::Sink::new(&dir, hash.clone()) {
        Ok(s) => s,
        Err(e) => return RunOutcome { code: EXIT_NUMERICAL, message: e.to_string(), out_dir: None },
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => return RunOutcome::config(ConfigError { field: "workers".into(), reason: e.to_string() }),
    };
    let result = pool.install(|| tasks::run_task(task, &cfg, &params, &mut sink));
    match result {
        Ok(checks) => {
            let m = manifest::manifest(&cfg, &sink, &checks, workers);
            let text = serde_json::to_string_pretty(&m).expect("json serialises");
            if let Err(e) = std::fs::write(dir.join("manifest.json"), text) {
                return RunOutcome { code: EXIT_NUMERICAL, message: e.to_string(), out_dir: Some(dir) };
            }
            let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{} = {:.3e} (threshold {:.1e})", c.name, c.value, c.threshold)).collect();
            if failed.is_empty() {
                RunOutcome { code: EXIT_OK, message: "all checks passed".into(), out_dir: Some(dir) }
            } else {
                RunOutcome { code: EXIT_CHECKS, message: format!("checks failed: {}", failed.join("; ")), out_dir: Some(dir) }
            }
        }
        Err(TaskError::Config(e)) => RunOutcome { code: EXIT_CONFIG, message: e.to_string(), out_dir: Some(dir) },
        Err(e) => {
            let diag = json!({
                "task": cfg.task,
                "config_hash": hash,
                "error": e.to_string(),
                "kind": match &e { TaskError::Numerical(_) => "numerical", _ => "io" },
                "notes": sink.notes,
                "versions": manifest::versions(),
            });
            let _ = std::fs::write(dir.join("diagnostic.json"), serde_json::to_string_pretty(&diag).expect("json serialises"));
            RunOutcome { code: EXIT_NUMERICAL, message: e.to_string(), out_dir: Some(dir) }
        }
    }
}
