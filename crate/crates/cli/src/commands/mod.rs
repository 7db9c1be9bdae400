pub mod basisplot;
pub mod diagnose;
pub mod filterbench;
pub mod generate;
pub mod theory;
pub mod train;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sfl_core::graph::{load_edge_list, load_features_csv, load_labels_csv};
use sfl_core::Graph;

use crate::config::RunConfig;

/// A check ran to completion and its property did not hold.
#[derive(Debug)]
pub struct PropertyFailure(pub String);

impl fmt::Display for PropertyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "property check failed: {}", self.0)
    }
}

impl std::error::Error for PropertyFailure {}

pub fn load_graph(graph: &Path, features: Option<&PathBuf>, labels: Option<&PathBuf>) -> Result<Graph> {
    let mut g = load_edge_list(graph).with_context(|| format!("loading graph {}", graph.display()))?;
    if let Some(p) = features {
        let x = load_features_csv(p).with_context(|| format!("loading features {}", p.display()))?;
        g = g.with_features(x)?;
    }
    if let Some(p) = labels {
        let y = load_labels_csv(p).with_context(|| format!("loading labels {}", p.display()))?;
        g = g.with_labels(y)?;
    }
    Ok(g)
}

/// Report body with the run configuration and its hash merged in.
pub fn with_provenance<T: Serialize>(body: &T, rc: &RunConfig) -> Result<Value> {
    let mut v = serde_json::to_value(body)?;
    if let (Value::Object(obj), Value::Object(prov)) = (&mut v, rc.provenance()?) {
        obj.extend(prov);
    }
    Ok(v)
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))
}

/// `report.csv` → `report.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().with_context(|| format!("bad list entry {s:?}")))
        .collect()
}
