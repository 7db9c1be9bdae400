use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sfl_core::graph::{
    complete_graph, cycle_graph, erdos_renyi, grid_graph, path_graph, save_edge_list, save_features_csv,
    save_labels_csv, sbm_generate, SbmParams,
};
use sfl_core::rng::{gaussian_matrix, rng};

use super::write_json;
use crate::config::{require, resolve, GlobalOptions};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// path, cycle, complete, grid, er or sbm.
    #[arg(long)]
    kind: Option<String>,
    /// Node count (path, cycle, complete, er).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Edge probability for er.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    /// Gaussian noise added to the sbm one-hot features.
    #[arg(long)]
    noise: Option<f64>,
    /// none, constant or gaussian (ignored for sbm).
    #[arg(long)]
    features: Option<String>,
    /// Feature columns for gaussian features.
    #[arg(long)]
    dim: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub kind: String,
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub p: f64,
    pub blocks: usize,
    pub block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub noise: f64,
    pub features: String,
    pub dim: usize,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            kind: "sbm".into(),
            n: 20,
            rows: 4,
            cols: 4,
            p: 0.3,
            blocks: 3,
            block_size: 20,
            p_in: 0.3,
            p_out: 0.05,
            noise: 0.0,
            features: "none".into(),
            dim: 1,
            out: None,
        }
    }
}

pub fn run(args: &Args, global: &GlobalOptions) -> Result<()> {
    let (s, rc): (Settings, _) = resolve("generate", args, global)?;
    let out = require(&s.out, "out")?;
    let g = match s.kind.as_str() {
        "path" => path_graph(s.n),
        "cycle" => cycle_graph(s.n),
        "complete" => complete_graph(s.n),
        "grid" => grid_graph(s.rows, s.cols)?,
        "er" => erdos_renyi(s.n, s.p, rc.seed)?,
        "sbm" => {
            let mut p = SbmParams::uniform(s.blocks, s.block_size, s.p_in, s.p_out);
            p.noise = s.noise;
            p.seed = rc.seed;
            sbm_generate(&p)?
        }
        other => bail!("unknown graph kind {other:?}"),
    };
    let n = g.n();
    let x = if s.kind == "sbm" {
        g.features().cloned()
    } else {
        match s.features.as_str() {
            "none" => None,
            "constant" => Some(DMatrix::from_element(n, 1, 1.0)),
            "gaussian" => Some(gaussian_matrix(&mut rng(rc.seed), n, s.dim, 1.0)),
            other => bail!("unknown feature kind {other:?}"),
        }
    };

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    save_edge_list(&g, out.join("graph.edges"))?;
    if let Some(x) = &x {
        save_features_csv(x, out.join("features.csv"))?;
    }
    if let Some(labels) = g.labels() {
        save_labels_csv(labels, out.join("labels.csv"))?;
    }
    write_json(&out.join("config.json"), &rc.provenance()?)?;
    println!("{} nodes, {} edges written to {}", n, g.edge_count(), out.display());
    Ok(())
}
