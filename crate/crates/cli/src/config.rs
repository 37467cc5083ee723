//! Versioned JSON configurations for `run` and `bench`.

use std::path::{Path, PathBuf};

use declab::e2d::ExperimentConfig;
use declab::ModelClass;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// `declab run --config`.
///
/// `class` is either an inline model class or a path to a class file,
/// resolved relative to the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub class: serde_json::Value,
    /// Index of the true model; defaults to the class file's `truth`.
    #[serde(default)]
    pub truth: Option<usize>,
    pub experiment: ExperimentConfig,
}

/// `declab bench --config`: `runs` independent runs of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub schema_version: u32,
    pub class: serde_json::Value,
    #[serde(default)]
    pub truth: Option<usize>,
    pub experiment: ExperimentConfig,
    pub runs: usize,
    #[serde(default)]
    pub write_traces: bool,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::schema("schema", format!("{}: {e}", path.display())))
}

fn check_version(v: u32) -> Result<(), CliError> {
    if v != SCHEMA_VERSION {
        return Err(CliError::schema("schema", format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

/// Loads an inline class or a class file path relative to `base`.
pub fn resolve_class(value: &serde_json::Value, base: &Path) -> Result<ModelClass, CliError> {
    match value {
        serde_json::Value::String(p) => {
            let path = PathBuf::from(p);
            let path = if path.is_relative() { base.join(path) } else { path };
            read_json(&path)
        }
        other => ModelClass::deserialize(other).map_err(|e| CliError::schema("schema", format!("class: {e}"))),
    }
}

fn truth_of(class: &ModelClass, truth: Option<usize>) -> Result<usize, CliError> {
    let t = truth
        .or(class.truth())
        .ok_or_else(|| CliError::schema("schema", "no truth index given in the configuration or the class"))?;
    if t >= class.len() {
        return Err(CliError::schema("index_out_of_range", format!("truth {t} out of range for {} models", class.len())));
    }
    Ok(t)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub struct LoadedRun {
    pub class: ModelClass,
    pub truth: usize,
    pub experiment: ExperimentConfig,
}

pub fn load_run(path: &Path) -> Result<LoadedRun, CliError> {
    let cfg: RunConfig = read_json(path)?;
    check_version(cfg.schema_version)?;
    cfg.experiment.validate()?;
    let class = resolve_class(&cfg.class, &base_dir(path))?;
    let truth = truth_of(&class, cfg.truth)?;
    Ok(LoadedRun { class, truth, experiment: cfg.experiment })
}

pub struct LoadedBench {
    pub run: LoadedRun,
    pub runs: usize,
    pub write_traces: bool,
}

pub fn load_bench(path: &Path) -> Result<LoadedBench, CliError> {
    let cfg: BenchConfig = read_json(path)?;
    check_version(cfg.schema_version)?;
    cfg.experiment.validate()?;
    if cfg.runs == 0 {
        return Err(CliError::schema("invalid_params", "runs must be positive"));
    }
    let class = resolve_class(&cfg.class, &base_dir(path))?;
    let truth = truth_of(&class, cfg.truth)?;
    Ok(LoadedBench {
        run: LoadedRun { class, truth, experiment: cfg.experiment },
        runs: cfg.runs,
        write_traces: cfg.write_traces,
    })
}
