//! Configuration, data generation, the experiment registry, bound
//! calculators and report writing behind the `qem` binary.

pub mod calculators;
pub mod cli;
pub mod config;
pub mod data;
pub mod experiments;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::bounds::BoundsError;
use crate::dataset::DatasetError;
use crate::em::EmError;
use crate::groups::GroupError;
use crate::ipm::IpmError;
use crate::models::ModelError;
use crate::numerics::NumericsError;
use crate::params::LayoutError;

use config::{Config, Params};
use experiments::{Ctx, Experiment};
use report::{RunReport, SCHEMA_VERSION};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("check aborted: {0}")]
    Check(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Em(#[from] EmError),
    #[error(transparent)]
    Ipm(#[from] IpmError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

/// A finished run: the report plus the artifact files it refers to.
pub struct Run {
    pub report: RunReport,
    pub files: Vec<(String, String)>,
}

/// Resolves `config` against the experiment schema and runs it. Config
/// problems are returned as errors; failures inside the experiment are
/// recorded in the report with a failing verdict.
pub fn run_experiment(exp: &Experiment, mut config: Config, seed: Option<u64>) -> Result<Run, HarnessError> {
    let file_seed = match config.remove("seed") {
        Some(s) => Some(s.parse::<u64>().map_err(|e| HarnessError::Config(format!("seed `{s}`: {e}")))?),
        None => None,
    };
    let seed = seed.or(file_seed).unwrap_or(DEFAULT_SEED);
    let params = Params::resolve(exp.schema, &config)?;
    let mut resolved = params.values().clone();
    resolved.insert("seed".into(), seed.to_string());
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let clock = Instant::now();
    let result = (exp.run)(&Ctx { params, seed });
    let wall_clock_s = clock.elapsed().as_secs_f64();
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(e @ HarnessError::Config(_)) => return Err(e),
        Err(e) => (report::Outcome::default(), Some(e.to_string())),
    };
    let verdict = error.is_none() && outcome.passed();
    let report = RunReport {
        schema: SCHEMA_VERSION,
        experiment: exp.name.into(),
        criterion: exp.criterion.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config: resolved,
        started_unix_ms,
        wall_clock_s,
        verdict,
        checks: outcome.checks,
        bounds: outcome.bounds,
        artifacts: outcome.files.iter().map(|(name, _)| name.clone()).collect(),
        error,
    };
    Ok(Run { report, files: outcome.files })
}

/// Writes `<out>/<experiment>/report.json` and the artifacts; returns the directory.
pub fn write_run(run: &Run, out: &Path) -> Result<PathBuf, HarnessError> {
    let dir = out.join(&run.report.experiment);
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let path = dir.join("report.json");
    fs::write(&path, run.report.to_json()).map_err(|e| HarnessError::io(&path, e))?;
    for (name, contents) in &run.files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(dir)
}
