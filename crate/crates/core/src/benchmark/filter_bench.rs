//! Learning known spectral filters from a single input signal.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tasks::{FilterTask, FilterTaskSet};
use crate::bases::{BasisFamily, BasisSpec, DEFAULT_DEGREE};
use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::graph::SymmetricOperator;
use crate::model::{LinearGnnModel, LossKind, ModelOptions, Target};
use crate::optim::{AdamConfig, GroupConfig};
use crate::rng::derive_seed;
use crate::train::{train, TrainConfig, Task};

pub const DEFAULT_LR_GRID: [f64; 5] = [0.0005, 0.001, 0.005, 0.01, 0.05];
pub const DEFAULT_JACOBI_GRID: [f64; 6] = [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBenchConfig {
    pub degree: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Candidate learning rates, shared by the linear weight and the filter
    /// coefficients.
    pub lr_grid: Vec<f64>,
    /// Candidate values for each Jacobi exponent; empty keeps the given ones.
    pub jacobi_grid: Vec<f64>,
    /// Held-out inputs per filter used to pick hyperparameters.
    pub tune_count: usize,
    pub jobs: usize,
    pub record_curves: bool,
}

impl Default for FilterBenchConfig {
    fn default() -> Self {
        FilterBenchConfig {
            degree: DEFAULT_DEGREE,
            max_epochs: 1000,
            patience: 200,
            seed: 0,
            lr_grid: DEFAULT_LR_GRID.to_vec(),
            jacobi_grid: DEFAULT_JACOBI_GRID.to_vec(),
            tune_count: 1,
            jobs: 1,
            record_curves: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRun {
    pub basis: String,
    pub filter: FilterKind,
    pub task: usize,
    pub seed: u64,
    pub spec: BasisSpec,
    pub lr: f64,
    /// `Σ (z − y)²` of the best epoch's model; `None` when training failed.
    pub sse: Option<f64>,
    pub epochs: usize,
    pub best_epoch: usize,
    pub weight: f64,
    pub coeffs: Vec<f64>,
    pub error: Option<String>,
    /// Training loss per epoch.
    #[serde(skip)]
    pub curve: Vec<f64>,
}

impl FilterRun {
    pub fn model(&self) -> Result<LinearGnnModel> {
        let mut m = LinearGnnModel::init(1, 1, self.spec.clone(), ModelOptions::default(), 0)?;
        m.weight[(0, 0)] = self.weight;
        m.coeffs = DMatrix::from_column_slice(self.coeffs.len(), 1, &self.coeffs);
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub basis: String,
    pub filter: FilterKind,
    pub spec: BasisSpec,
    pub lr: f64,
    /// Mean SSE over the tuning inputs.
    pub tuning_sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub basis: String,
    pub filter: FilterKind,
    pub mean_sse: f64,
    pub median_sse: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub side: usize,
    pub count: usize,
    pub task_seed: u64,
    pub config: FilterBenchConfig,
    pub selections: Vec<Selection>,
    pub summary: Vec<SummaryRow>,
    pub runs: Vec<FilterRun>,
}

/// Basis name without family parameters, so tuned Jacobi variants share a row.
pub fn basis_name(spec: &BasisSpec) -> String {
    match spec.family {
        BasisFamily::Jacobi { .. } => "jacobi".into(),
        _ => spec.label(),
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

impl BenchReport {
    pub fn row(&self, basis: &str, filter: FilterKind) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.basis == basis && r.filter == filter)
    }

    /// Flat table `basis,filter,task,seed,sse`, one row per run.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["basis", "filter", "task", "seed", "sse"])?;
        for r in &self.runs {
            w.write_record([
                r.basis.clone(),
                r.filter.name().to_string(),
                r.task.to_string(),
                r.seed.to_string(),
                r.sse.map_or_else(|| "NaN".to_string(), |v| v.to_string()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `report.json` (with the keys of `extra` merged in), `results.csv`
    /// and, when curves were recorded, `curves/<basis>_<filter>_<task>.csv`.
    pub fn save(&self, dir: impl AsRef<Path>, extra: Option<&serde_json::Value>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut json = serde_json::to_value(self)?;
        if let (Some(serde_json::Value::Object(extra)), Some(obj)) = (extra, json.as_object_mut()) {
            obj.extend(extra.clone());
        }
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&json)?)?;
        self.write_csv(fs::File::create(dir.join("results.csv"))?)?;
        if self.runs.iter().any(|r| !r.curve.is_empty()) {
            let cdir = dir.join("curves");
            fs::create_dir_all(&cdir)?;
            for r in self.runs.iter().filter(|r| !r.curve.is_empty()) {
                let path = cdir.join(format!("{}_{}_{}.csv", r.basis, r.filter.name(), r.task));
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["epoch", "train_loss"])?;
                for (e, l) in r.curve.iter().enumerate() {
                    w.write_record([e.to_string(), l.to_string()])?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn train_config(cfg: &FilterBenchConfig, lr: f64, seed: u64) -> TrainConfig {
    let g = GroupConfig::new(lr, 0.0);
    TrainConfig {
        optimizer: AdamConfig { linear: g, coeffs: g, pcd: g },
        dropout_x: 0.0,
        dropout_hidden: 0.0,
        max_epochs: cfg.max_epochs,
        patience: cfg.patience,
        seed,
        loss: LossKind::Squared,
    }
}

/// Train one single-channel model without bias or coefficient decomposition.
pub fn fit_filter_task(
    a_hat: &SymmetricOperator,
    task: &FilterTask,
    spec: &BasisSpec,
    lr: f64,
    cfg: &FilterBenchConfig,
) -> FilterRun {
    let seed = derive_seed(cfg.seed, &[task.seed]);
    let mut run = FilterRun {
        basis: basis_name(spec),
        filter: task.filter,
        task: task.index,
        seed: task.seed,
        spec: spec.clone(),
        lr,
        sse: None,
        epochs: 0,
        best_epoch: 0,
        weight: 0.0,
        coeffs: vec![],
        error: None,
        curve: vec![],
    };
    let outcome = (|| -> Result<()> {
        let x = task.x_matrix();
        let y = task.y_matrix();
        let n = x.nrows();
        let model = LinearGnnModel::init(1, 1, spec.clone(), ModelOptions::default(), seed)?;
        let t = Task { a_hat, x: &x, target: Target::Regression(y.clone()), train: (0..n).collect(), val: vec![], test: vec![] };
        let (best, hist) = train(model, &t, &train_config(cfg, lr, seed))?;
        let z = best.forward(a_hat, &x)?;
        run.sse = Some((z - y).norm_squared());
        run.epochs = hist.records.len();
        run.best_epoch = hist.best_epoch;
        run.weight = best.weight[(0, 0)];
        run.coeffs = best.coeffs.as_slice().to_vec();
        if cfg.record_curves {
            run.curve = hist.records.iter().map(|r| r.train_loss).collect();
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("{} on {} task {} failed: {e}", run.basis, task.filter.name(), task.index);
        run.error = Some(e.to_string());
    }
    run
}

fn candidates(spec: &BasisSpec, cfg: &FilterBenchConfig) -> Result<Vec<(BasisSpec, f64)>> {
    let specs = match spec.family {
        BasisFamily::Jacobi { .. } if !cfg.jacobi_grid.is_empty() => {
            let mut v = Vec::new();
            for &a in &cfg.jacobi_grid {
                for &b in &cfg.jacobi_grid {
                    v.push(BasisSpec::jacobi(a, b, spec.degree)?);
                }
            }
            v
        }
        _ => vec![spec.clone()],
    };
    Ok(specs.into_iter().flat_map(|s| cfg.lr_grid.iter().map(move |&lr| (s.clone(), lr))).collect())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))
}

/// Select each basis' hyperparameters per filter on held-out inputs, then
/// train on every task and summarize the final SSE.
pub fn run_filter_bench(set: &FilterTaskSet, bases: &[BasisSpec], cfg: &FilterBenchConfig) -> Result<BenchReport> {
    if set.tasks.is_empty() || bases.is_empty() {
        return Err(Error::Precondition("filter benchmark needs at least one task and one basis".into()));
    }
    if cfg.lr_grid.is_empty() || cfg.lr_grid.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
        return Err(Error::InvalidParameter("learning-rate grid must hold positive values".into()));
    }
    for b in bases {
        b.validate()?;
    }
    let count = set.tasks_for(FilterKind::BENCHMARK[0]).count();
    let pool = pool(cfg.jobs)?;
    let tuning = set.tuning_tasks(cfg.tune_count)?;

    // Hyperparameter selection per (basis, filter).
    let mut jobs = Vec::new();
    for (bi, b) in bases.iter().enumerate() {
        let cands = candidates(b, cfg)?;
        for filter in FilterKind::BENCHMARK {
            for (ci, c) in cands.iter().enumerate() {
                for t in tuning.iter().filter(|t| t.filter == filter) {
                    jobs.push((bi, filter, ci, c.clone(), t));
                }
            }
        }
    }
    let needs_tuning = jobs.len() > bases.len() * FilterKind::BENCHMARK.len() * cfg.tune_count;
    let tuned: Vec<(usize, FilterKind, usize, BasisSpec, f64, f64)> = if needs_tuning {
        pool.install(|| {
            jobs.par_iter()
                .map(|(bi, filter, ci, (spec, lr), t)| {
                    let r = fit_filter_task(&set.a_hat, t, spec, *lr, cfg);
                    (*bi, *filter, *ci, spec.clone(), *lr, r.sse.unwrap_or(f64::INFINITY))
                })
                .collect()
        })
    } else {
        vec![]
    };

    let mut selections = Vec::new();
    for (bi, b) in bases.iter().enumerate() {
        for filter in FilterKind::BENCHMARK {
            let mut best: Option<(BasisSpec, f64, f64)> = None;
            let mut groups: Vec<(usize, BasisSpec, f64, Vec<f64>)> = Vec::new();
            for (tbi, tf, ci, spec, lr, sse) in &tuned {
                if *tbi != bi || *tf != filter {
                    continue;
                }
                match groups.iter_mut().find(|g| g.0 == *ci) {
                    Some(g) => g.3.push(*sse),
                    None => groups.push((*ci, spec.clone(), *lr, vec![*sse])),
                }
            }
            for (_, spec, lr, sses) in groups {
                let mean = sses.iter().sum::<f64>() / sses.len() as f64;
                if best.as_ref().is_none_or(|b| mean < b.2) {
                    best = Some((spec, lr, mean));
                }
            }
            let (spec, lr, tuning_sse) = best.unwrap_or((b.clone(), cfg.lr_grid[0], f64::NAN));
            selections.push(Selection { basis: basis_name(b), filter, spec, lr, tuning_sse });
        }
    }

    let mut eval_jobs = Vec::new();
    for (bi, _) in bases.iter().enumerate() {
        for (fi, filter) in FilterKind::BENCHMARK.iter().enumerate() {
            let sel = &selections[bi * FilterKind::BENCHMARK.len() + fi];
            for t in set.tasks_for(*filter) {
                eval_jobs.push((sel, t));
            }
        }
    }
    let runs: Vec<FilterRun> = pool.install(|| {
        eval_jobs.par_iter().map(|(sel, t)| fit_filter_task(&set.a_hat, t, &sel.spec, sel.lr, cfg)).collect()
    });

    let mut summary = Vec::new();
    for sel in &selections {
        let rs: Vec<&FilterRun> = runs.iter().filter(|r| r.basis == sel.basis && r.filter == sel.filter).collect();
        let mut ok: Vec<f64> = rs.iter().filter_map(|r| r.sse).collect();
        let failures = rs.len() - ok.len();
        let mean_sse = if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / ok.len() as f64 };
        // Failed runs count as infinitely bad for the median.
        ok.extend(std::iter::repeat_n(f64::INFINITY, failures));
        summary.push(SummaryRow { basis: sel.basis.clone(), filter: sel.filter, mean_sse, median_sse: median(&mut ok), failures });
    }

    Ok(BenchReport { side: set.side, count, task_seed: set.seed, config: cfg.clone(), selections, summary, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::tasks::make_filter_tasks;
    use crate::spectral::{cluster_eigenvalues, DEFAULT_TOL_EIG};

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn jacobi_grid_expands_candidates() {
        let cfg = FilterBenchConfig::default();
        assert_eq!(candidates(&BasisSpec::jacobi(1.0, 1.0, 3).unwrap(), &cfg).unwrap().len(), 36 * 5);
        assert_eq!(candidates(&BasisSpec::monomial(3), &cfg).unwrap().len(), 5);
    }

    #[test]
    fn tiny_grid_is_fit_exactly_by_every_basis() {
        let set = make_filter_tasks(2, 1, 3).unwrap();
        let distinct = cluster_eigenvalues(&set.spectrum.eigenvalues, DEFAULT_TOL_EIG).len();
        let degree = distinct - 1;
        let bases = [
            BasisSpec::monomial(degree),
            BasisSpec::chebyshev(degree),
            BasisSpec::bernstein(degree),
            BasisSpec::jacobi(0.5, 0.5, degree).unwrap(),
        ];
        let cfg = FilterBenchConfig {
            max_epochs: 3000,
            patience: 3000,
            lr_grid: vec![0.01],
            jacobi_grid: vec![],
            ..Default::default()
        };
        let report = run_filter_bench(&set, &bases, &cfg).unwrap();
        assert_eq!(report.runs.len(), 4 * 5);
        for r in &report.runs {
            assert!(r.sse.unwrap() <= 1e-8, "{} {}: {:?}", r.basis, r.filter.name(), r.sse);
        }
    }

    #[test]
    fn report_is_self_consistent_and_deterministic() {
        let set = make_filter_tasks(4, 2, 5).unwrap();
        let cfg = FilterBenchConfig {
            max_epochs: 50,
            lr_grid: vec![0.01, 0.05],
            jacobi_grid: vec![0.0, 1.0],
            record_curves: true,
            jobs: 2,
            ..Default::default()
        };
        let bases = [BasisSpec::monomial(3), BasisSpec::jacobi(0.0, 0.0, 3).unwrap()];
        let a = run_filter_bench(&set, &bases, &cfg).unwrap();
        let b = run_filter_bench(&set, &bases, &cfg).unwrap();
        assert_eq!(a, b);
        for r in &a.runs {
            let t = set.tasks.iter().find(|t| t.filter == r.filter && t.index == r.task).unwrap();
            let z = r.model().unwrap().forward(&set.a_hat, &t.x_matrix()).unwrap();
            assert_close!((z - t.y_matrix()).norm_squared(), r.sse.unwrap(), 1e-10);
            assert_eq!(r.curve.len(), r.epochs);
        }
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 2 * 5 * 2);
    }
}
