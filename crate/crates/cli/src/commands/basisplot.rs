use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sfl_core::bases::{basis_curves, write_basis_curves_csv, FamilyName, CURVE_POINTS, DEFAULT_DEGREE};

use super::{sidecar, write_json};
use crate::config::{require, resolve, GlobalOptions};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Grid points on [0, 2].
    #[arg(long)]
    points: Option<usize>,
    /// Divide each curve by its value at λ = 0.
    #[arg(long)]
    normalize: bool,
    /// Output CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub basis: String,
    pub degree: usize,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub points: usize,
    pub normalize: bool,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            basis: "jacobi".into(),
            degree: DEFAULT_DEGREE,
            a: 1.0,
            b: 1.0,
            alpha: 0.1,
            points: CURVE_POINTS,
            normalize: false,
            out: None,
        }
    }
}

pub fn run(args: &Args, global: &GlobalOptions) -> Result<()> {
    let (s, rc): (Settings, _) = resolve("basisplot", args, global)?;
    let out = require(&s.out, "out")?;
    let family: FamilyName = s.basis.parse()?;
    let spec = family.spec(s.degree, s.a, s.b, s.alpha)?;
    let rows = basis_curves(&spec, s.points, s.normalize)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_basis_curves_csv(&rows, file)?;
    write_json(&sidecar(out, "config.json"), &rc.provenance()?)?;
    println!("{} rows for {} basis functions", rows.len(), s.degree + 1);
    Ok(())
}
