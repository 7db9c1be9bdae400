use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sfl_core::spectral::{
    diagnose, laplacian_spectrum, signal_density, DEFAULT_DENSITY_BINS, DEFAULT_TOL_EIG, DEFAULT_TOL_MISSING,
};

use super::{load_graph, sidecar, with_provenance, write_json};
use crate::config::{require, resolve, GlobalOptions};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Edge list (`u v` per line, optional `# n=<count>` header).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Node feature CSV with a header row.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    tol_eig: Option<f64>,
    #[arg(long)]
    tol_miss: Option<f64>,
    /// Density histogram bins on [0, 2].
    #[arg(long)]
    bins: Option<usize>,
    /// Output JSON; the density CSV is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub graph: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub tol_eig: f64,
    pub tol_miss: f64,
    pub bins: usize,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            graph: None,
            features: None,
            tol_eig: DEFAULT_TOL_EIG,
            tol_miss: DEFAULT_TOL_MISSING,
            bins: DEFAULT_DENSITY_BINS,
            out: None,
        }
    }
}

pub fn run(args: &Args, global: &GlobalOptions) -> Result<()> {
    let (s, rc): (Settings, _) = resolve("diagnose", args, global)?;
    let out = require(&s.out, "out")?;
    let g = load_graph(require(&s.graph, "graph")?, s.features.as_ref(), None)?;
    let spectrum = laplacian_spectrum(&g)?;
    let d = diagnose(&spectrum, g.features(), s.tol_miss, s.tol_eig)?;

    let mut body = json!({
        "diagnostics": d,
        "spectrum": {
            "min_eigenvalue": spectrum.eigenvalues.first(),
            "max_eigenvalue": spectrum.eigenvalues.last(),
            "multiplicities": d.multiplicities().collect::<Vec<_>>(),
        },
    });
    if let Some(x) = g.features() {
        let density = signal_density(&spectrum, x, s.bins)?;
        let path = sidecar(out, "density.csv");
        density.save_csv(&path)?;
        body["density_csv"] = json!(path);
    }
    write_json(out, &with_provenance(&body, &rc)?)?;
    println!(
        "n = {}, distinct eigenvalues = {}, multi_ratio = {:.1}%{}",
        d.n,
        d.distinct_eigenvalues,
        d.multi_ratio,
        d.n_missing.map(|m| format!(", missing components = {m}")).unwrap_or_default()
    );
    Ok(())
}
