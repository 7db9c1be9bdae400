//! Run configuration: config file, flags and environment merged into one
//! serializable record whose hash is embedded in every report.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const SEED_ENV: &str = "SFL_SEED";

#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub jobs: usize,
    pub settings: Value,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn hash(&self) -> Result<String> {
        Ok(sfl_core::model::config_hash(self)?)
    }

    /// `{"run_config": ..., "config_hash": ...}` for embedding in reports.
    pub fn provenance(&self) -> Result<Value> {
        Ok(json!({ "run_config": self, "config_hash": self.hash()? }))
    }
}

/// Flags that were not given serialize as `null` (options) or `false`
/// (switches); both leave the config-file value in place.
fn given_flags(args: Value) -> Map<String, Value> {
    match args {
        Value::Object(map) => map.into_iter().filter(|(_, v)| !matches!(v, Value::Null | Value::Bool(false))).collect(),
        _ => Map::new(),
    }
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?)),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{SEED_ENV}: {e}"),
    }
}

/// Merge defaults < config file < flags for the settings, and
/// config file < `--seed` < `SFL_SEED` for the seed.
pub fn resolve<A: Serialize, S: Serialize + DeserializeOwned>(
    command: &str,
    args: &A,
    global: &GlobalOptions,
) -> Result<(S, RunConfig)> {
    let file = global.config.as_deref().map(RunConfig::load).transpose()?;
    merge(command, serde_json::to_value(args)?, file, global, seed_from_env()?)
}

fn merge<S: Serialize + DeserializeOwned>(
    command: &str,
    args: Value,
    file: Option<RunConfig>,
    global: &GlobalOptions,
    env_seed: Option<u64>,
) -> Result<(S, RunConfig)> {
    if let Some(f) = &file {
        if f.command != command {
            bail!("config file is for `{}`, not `{command}`", f.command);
        }
    }
    let mut merged = match file.as_ref().map(|f| &f.settings) {
        Some(Value::Object(m)) => m.clone(),
        Some(Value::Null) | None => Map::new(),
        Some(_) => bail!("config `settings` must be a JSON object"),
    };
    merged.extend(given_flags(args));
    let settings: S = serde_json::from_value(Value::Object(merged)).context("invalid settings")?;

    let seed = env_seed.or(global.seed).or(file.as_ref().map(|f| f.seed)).unwrap_or(0);
    let jobs = global.jobs.or(file.as_ref().map(|f| f.jobs)).unwrap_or(1);
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let rc = RunConfig { command: command.to_string(), seed, jobs, settings: serde_json::to_value(&settings)? };
    Ok((settings, rc))
}

pub fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value.as_ref().with_context(|| format!("missing required --{flag}"))
}
