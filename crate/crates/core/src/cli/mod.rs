//! Config parsing and study orchestration behind the `epiflux` binary.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error,
//! 4 statistical gate failure (only with `--gate`).

mod config;
mod study;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::error::Error;

pub use config::{parse_config, RunConfig, StudyKind};
pub use study::{run_study, GateCheck, StudyOutput};

/// Why a CLI invocation did not succeed.
#[derive(Debug)]
pub enum Failure {
    Config(Error),
    Runtime(Error),
    Gate(Vec<GateCheck>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Gate(_) => 4,
        }
    }

    /// Machine-readable error record, printed as one JSON line on stderr.
    pub fn record(&self) -> serde_json::Value {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => json!({
                "status": "error",
                "exit_code": self.exit_code(),
                "kind": e.kind(),
                "message": e.to_string(),
            }),
            Failure::Gate(failed) => json!({
                "status": "gate_failed",
                "exit_code": self.exit_code(),
                "kind": "gate",
                "failed": failed,
            }),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// Load, override and validate a config file; errors are configuration failures.
pub fn load_config(kind: StudyKind, path: &Path, overrides: &Overrides) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(Error::io(path, e)))?;
    prepare_config(kind, &text, overrides)
}

/// Parse config text for `kind`, apply overrides and resolve the output directory.
pub fn prepare_config(kind: StudyKind, text: &str, overrides: &Overrides) -> Result<RunConfig, Failure> {
    let mut config = parse_config(text).map_err(Failure::Config)?;
    if let Some(declared) = config.study {
        if declared != kind {
            return Err(Failure::Config(Error::invalid(
                "study",
                format!("config declares '{}' but the subcommand runs '{}'", declared.as_str(), kind.as_str()),
            )));
        }
    }
    config.study = Some(kind);
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(dir) = &overrides.out_dir {
        config.out_dir = dir.clone();
    }
    config.out_dir = std::path::absolute(&config.out_dir)
        .map_err(|e| Failure::Config(Error::io(&config.out_dir, e)))?;
    Ok(config)
}

/// Run a validated config end to end: create the output directory, run the
/// study, write `metadata.json`, and apply gates if requested.
pub fn execute(kind: StudyKind, config: &RunConfig, gate: bool) -> Result<StudyOutput, Failure> {
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(Error::io(dir, e)))?;
    let start = Instant::now();
    let output = run_study(kind, config, dir).map_err(|e| match e {
        e @ (Error::InvalidParameter { .. } | Error::Config(_)) => Failure::Config(e),
        e => Failure::Runtime(e),
    })?;
    let metadata = json!({
        "study": kind,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "config": config,
        "files": output.files,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let path = dir.join("metadata.json");
    let mut text = serde_json::to_string_pretty(&metadata).expect("serializable");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Failure::Runtime(Error::io(&path, e)))?;
    if gate && !output.gates_passed() {
        return Err(Failure::Gate(output.gates.iter().filter(|g| !g.passed).cloned().collect()));
    }
    Ok(output)
}
