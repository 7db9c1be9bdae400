use std::path::PathBuf;

use anyhow::{bail, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sfl_core::filters::FilterKind;
use sfl_core::graph::{erdos_renyi, grid_graph};
use sfl_core::rng::{derive_seed, gaussian_matrix, gaussian_vector, rng};
use sfl_core::spectral::{cluster_eigenvalues, laplacian_spectrum, Spectrum, DEFAULT_TOL_EIG};
use sfl_core::theory::automorphism::symmetry_scan;
use sfl_core::theory::bias::{bias_counterexample, witness_check};
use sfl_core::theory::interpolation::interpolation_bound_check;
use sfl_core::theory::random_features::{random_feature_degree_demand, random_feature_spectrum_test};
use sfl_core::theory::universality::{random_feature_universality, universality_solve};
use sfl_core::theory::wl::wl_bound_check;
use sfl_core::Graph;

use super::{load_graph, with_provenance, write_json, PropertyFailure};
use crate::config::{resolve, GlobalOptions};

/// Relative residual accepted as an exact reconstruction.
const RESIDUAL_TOL: f64 = 1e-6;
/// Attempts at drawing a connected random graph with a simple spectrum.
const GRAPH_ATTEMPTS: u64 = 1000;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// universality, wl, automorphism, randfeat, bias or interp.
    #[arg(long)]
    check: Option<String>,
    /// Edge list; a random graph is drawn when omitted.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    /// Size of generated graphs.
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability of generated graphs.
    #[arg(long)]
    p: Option<f64>,
    /// Polynomial degree (wl, interp).
    #[arg(long)]
    degree: Option<usize>,
    /// Random model draws (wl).
    #[arg(long)]
    trials: Option<usize>,
    /// Largest graph size for the exhaustive automorphism scan.
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Monte Carlo samples (randfeat).
    #[arg(long)]
    samples: Option<usize>,
    /// Random parameter draws (bias).
    #[arg(long)]
    draws: Option<usize>,
    /// Target response (interp).
    #[arg(long)]
    filter: Option<String>,
    /// JSON report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub check: Option<String>,
    pub graph: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub n: usize,
    pub p: f64,
    pub degree: Option<usize>,
    pub trials: usize,
    pub nmax: usize,
    pub sigma: f64,
    pub samples: usize,
    pub draws: usize,
    pub filter: String,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            check: None,
            graph: None,
            features: None,
            n: 12,
            p: 0.4,
            degree: None,
            trials: 10,
            nmax: 6,
            sigma: 1.0,
            samples: 10_000,
            draws: 100,
            filter: "cos".into(),
            out: None,
        }
    }
}

fn distinct(s: &Spectrum) -> bool {
    cluster_eigenvalues(&s.eigenvalues, DEFAULT_TOL_EIG).len() == s.n()
}

/// The given graph, or the first connected `G(n, p)` draw with a simple spectrum.
fn graph_for(s: &Settings, seed: u64) -> Result<Graph> {
    if let Some(path) = &s.graph {
        return load_graph(path, s.features.as_ref(), None);
    }
    for attempt in 0..GRAPH_ATTEMPTS {
        let g = erdos_renyi(s.n, s.p, derive_seed(seed, &[attempt]))?;
        if g.is_connected() && distinct(&laplacian_spectrum(&g)?) {
            return Ok(g);
        }
    }
    bail!("no connected G({}, {}) with distinct eigenvalues in {GRAPH_ATTEMPTS} draws", s.n, s.p)
}

fn universality(s: &Settings, seed: u64) -> Result<(bool, Value)> {
    let g = graph_for(s, seed)?;
    let spectrum = laplacian_spectrum(&g)?;
    let x = match g.features() {
        Some(x) => x.clone(),
        None => gaussian_matrix(&mut rng(derive_seed(seed, &[1])), g.n(), 1, 1.0),
    };
    let z = gaussian_vector(&mut rng(derive_seed(seed, &[2])), g.n(), 1.0);
    match universality_solve(&spectrum, &x, &z, seed) {
        Ok(sol) => Ok((
            sol.relative_residual <= RESIDUAL_TOL,
            json!({ "n": g.n(), "relative_residual": sol.relative_residual, "degree": sol.filter.degree(), "attempts": sol.attempts }),
        )),
        Err(sfl_core::Error::Precondition(reason)) => Ok((false, json!({ "n": g.n(), "reason": reason }))),
        Err(e) => Err(e.into()),
    }
}

fn wl(s: &Settings, seed: u64) -> Result<(bool, Value)> {
    let g = graph_for(s, seed)?;
    let x = g.features().cloned().unwrap_or_else(|| DMatrix::from_element(g.n(), 1, 1.0));
    let r = wl_bound_check(&g, &x, s.degree.unwrap_or(2), s.trials, seed)?;
    Ok((r.passed(), serde_json::to_value(&r)?))
}

fn automorphism(s: &Settings) -> Result<(bool, Value)> {
    let r = symmetry_scan(s.nmax)?;
    Ok((r.passed(), serde_json::to_value(&r)?))
}

fn randfeat(s: &Settings, seed: u64) -> Result<(bool, Value)> {
    let g = match &s.graph {
        Some(path) => load_graph(path, s.features.as_ref(), None)?,
        None => grid_graph(2, 5)?,
    };
    let spectrum = laplacian_spectrum(&g)?;
    let stats = random_feature_spectrum_test(&spectrum, s.sigma, s.samples, seed)?;
    let x = g.features().cloned().unwrap_or_else(|| DMatrix::from_element(g.n(), 1, 1.0));
    let z = gaussian_vector(&mut rng(derive_seed(seed, &[2])), g.n(), 1.0);
    let sol = random_feature_universality(&spectrum, &x, &z, seed)?;
    let demand = if distinct(&spectrum) {
        Some(random_feature_degree_demand(&spectrum, seed, RESIDUAL_TOL, 0.5)?)
    } else {
        None
    };
    let passed = stats.passed() && sol.relative_residual <= RESIDUAL_TOL;
    Ok((passed, json!({ "spectrum_statistics": stats, "multiplicity_resolution": sol, "degree_demand": demand })))
}

fn bias(s: &Settings, seed: u64) -> Result<(bool, Value)> {
    let c = bias_counterexample(s.n.max(4))?;
    let r = witness_check(&c, s.draws, 3, seed);
    Ok((r.passed(), serde_json::to_value(&r)?))
}

fn interp(s: &Settings) -> Result<(bool, Value)> {
    let filter: FilterKind = s.filter.parse()?;
    let r = interpolation_bound_check(filter, s.degree.unwrap_or(4))?;
    Ok((r.within_bound(), serde_json::to_value(&r)?))
}

pub fn run(args: &Args, global: &GlobalOptions) -> Result<()> {
    let (s, rc): (Settings, _) = resolve("theory", args, global)?;
    let check = s.check.clone().unwrap_or_default();
    let (passed, result) = match check.as_str() {
        "universality" => universality(&s, rc.seed)?,
        "wl" => wl(&s, rc.seed)?,
        "automorphism" => automorphism(&s)?,
        "randfeat" => randfeat(&s, rc.seed)?,
        "bias" => bias(&s, rc.seed)?,
        "interp" => interp(&s)?,
        "" => bail!("missing required --check"),
        other => bail!("unknown check {other:?}"),
    };
    let report = with_provenance(&json!({ "check": check, "passed": passed, "result": result }), &rc)?;
    match &s.out {
        Some(path) => write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    eprintln!("{check}: {}", if passed { "pass" } else { "FAIL" });
    if !passed {
        return Err(PropertyFailure(check).into());
    }
    Ok(())
}
