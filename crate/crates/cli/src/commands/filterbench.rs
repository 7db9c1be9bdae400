use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sfl_core::bases::{FamilyName, DEFAULT_DEGREE};
use sfl_core::benchmark::filter_bench::{DEFAULT_JACOBI_GRID, DEFAULT_LR_GRID};
use sfl_core::benchmark::tasks::DEFAULT_SIDE;
use sfl_core::benchmark::{make_filter_tasks, run_filter_bench, FilterBenchConfig};
use sfl_core::filters::FilterKind;

use super::parse_list;
use crate::config::{require, resolve, GlobalOptions};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Grid side length.
    #[arg(long)]
    side: Option<usize>,
    /// Input signals per filter.
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated bases (monomial, chebyshev, bernstein, jacobi, appnp, sgc).
    #[arg(long)]
    bases: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    /// Maximum training epochs per task.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Comma-separated learning-rate candidates.
    #[arg(long)]
    lr: Option<String>,
    /// Comma-separated candidates for each Jacobi exponent.
    #[arg(long)]
    jacobi_grid: Option<String>,
    /// Jacobi exponents used when the grid is empty.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Held-out inputs per filter for hyperparameter selection.
    #[arg(long)]
    tune_count: Option<usize>,
    /// Skip writing per-run training curves.
    #[arg(long)]
    no_curves: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub side: usize,
    pub count: usize,
    pub bases: String,
    pub degree: usize,
    pub epochs: usize,
    pub patience: usize,
    pub lr: String,
    pub jacobi_grid: String,
    pub a: f64,
    pub b: f64,
    pub tune_count: usize,
    pub no_curves: bool,
    pub out: Option<PathBuf>,
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl Default for Settings {
    fn default() -> Self {
        let cfg = FilterBenchConfig::default();
        Settings {
            side: DEFAULT_SIDE,
            count: 10,
            bases: "monomial,chebyshev,bernstein,jacobi".into(),
            degree: DEFAULT_DEGREE,
            epochs: cfg.max_epochs,
            patience: cfg.patience,
            lr: join(&DEFAULT_LR_GRID),
            jacobi_grid: join(&DEFAULT_JACOBI_GRID),
            a: 1.0,
            b: 1.0,
            tune_count: cfg.tune_count,
            no_curves: false,
            out: None,
        }
    }
}

pub fn run(args: &Args, global: &GlobalOptions) -> Result<()> {
    let (s, rc): (Settings, _) = resolve("filterbench", args, global)?;
    let out = require(&s.out, "out")?;
    let bases = parse_list::<FamilyName>(&s.bases)?
        .into_iter()
        .map(|f| f.spec(s.degree, s.a, s.b, 0.1))
        .collect::<sfl_core::Result<Vec<_>>>()?;
    let cfg = FilterBenchConfig {
        degree: s.degree,
        max_epochs: s.epochs,
        patience: s.patience,
        seed: rc.seed,
        lr_grid: parse_list(&s.lr)?,
        jacobi_grid: parse_list(&s.jacobi_grid)?,
        tune_count: s.tune_count,
        jobs: rc.jobs,
        record_curves: !s.no_curves,
    };
    log::info!("generating {} inputs on a {}x{} grid", s.count, s.side, s.side);
    let set = make_filter_tasks(s.side, s.count, rc.seed)?;
    let report = run_filter_bench(&set, &bases, &cfg)?;
    report.save(out, Some(&rc.provenance()?))?;

    println!("{:<10} {}", "basis", FilterKind::BENCHMARK.map(|f| format!("{:>12}", f.name())).join(""));
    let mut names: Vec<&str> = report.summary.iter().map(|r| r.basis.as_str()).collect();
    names.dedup();
    for b in names {
        let cells: String = FilterKind::BENCHMARK
            .iter()
            .map(|&f| format!("{:>12.3e}", report.row(b, f).map_or(f64::NAN, |r| r.mean_sse)))
            .collect();
        println!("{b:<10} {cells}");
    }
    Ok(())
}
