//! Full-batch training with Adam, per-epoch dropout and early stopping on
//! the validation metric.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SymmetricOperator;
use crate::model::{accuracy, loss_value_and_grad, DropoutMasks, Inputs, LinearGnnModel, LossKind, Target};
use crate::optim::{Adam, AdamConfig};
use crate::rng::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: AdamConfig,
    pub dropout_x: f64,
    pub dropout_hidden: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: AdamConfig::default(),
            dropout_x: 0.0,
            dropout_hidden: 0.0,
            max_epochs: 1000,
            patience: 200,
            seed: 0,
            loss: LossKind::Squared,
        }
    }
}

pub struct Task<'a> {
    pub a_hat: &'a SymmetricOperator,
    pub x: &'a DMatrix<f64>,
    pub target: Target,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Task<'_> {
    fn validate(&self) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::Precondition("training mask is empty".into()));
        }
        let n = self.a_hat.n();
        let mut seen = HashSet::new();
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n {
                return Err(Error::Bounds { index: i, n });
            }
            if !seen.insert(i) {
                return Err(Error::Precondition(format!("node {i} appears in more than one split")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Loss of the epoch's (possibly dropped-out) training step.
    pub train_loss: f64,
    /// Validation loss for squared loss, validation accuracy for cross-entropy.
    pub val_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub stopped_early: bool,
}

pub fn evaluate(model: &LinearGnnModel, inp: &Inputs, target: &Target, mask: &[usize], loss: LossKind) -> Result<Metrics> {
    let z = model.forward_inputs(inp)?;
    metrics_from_output(&z, target, mask, loss)
}

fn metrics_from_output(z: &DMatrix<f64>, target: &Target, mask: &[usize], loss: LossKind) -> Result<Metrics> {
    let (value, _) = loss_value_and_grad(z, target, mask, loss)?;
    let acc = match target {
        Target::Classes(labels) => Some(accuracy(z, labels, mask)),
        Target::Regression(_) => None,
    };
    Ok(Metrics { loss: value, accuracy: acc })
}

/// Train `model` and return the parameters of the best validation epoch.
/// Without a validation split the training loss selects the best epoch.
pub fn train(mut model: LinearGnnModel, task: &Task, cfg: &TrainConfig) -> Result<(LinearGnnModel, History)> {
    task.validate()?;
    let use_dropout = cfg.dropout_x > 0.0 || cfg.dropout_hidden > 0.0;
    let inp = if use_dropout {
        Inputs::new(task.a_hat, task.x)
    } else {
        Inputs::with_basis_cache(task.a_hat, task.x, &model.spec)?
    };
    let maximize = cfg.loss == LossKind::SoftmaxCe && !task.val.is_empty();
    let select_mask = if task.val.is_empty() { &task.train } else { &task.val };

    let mut adam = Adam::new(&model, cfg.optimizer);
    let mut best = model.clone();
    let mut best_metric = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut records = Vec::new();
    let mut stopped_early = false;
    let n = task.x.nrows();

    for epoch in 0..cfg.max_epochs {
        let masks = if use_dropout {
            let mut r = rng(derive_seed(cfg.seed, &[epoch as u64]));
            Some(DropoutMasks::sample(
                &mut r,
                (n, model.d_in()),
                (n, model.d_out()),
                cfg.dropout_x,
                cfg.dropout_hidden,
            )?)
        } else {
            None
        };
        let (loss, grads) = model.loss_and_grads(&inp, &task.target, &task.train, cfg.loss, masks.as_ref())?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        adam.step(&mut model, &grads);

        let z = model.forward_inputs(&inp)?;
        let m = metrics_from_output(&z, &task.target, select_mask, cfg.loss)?;
        if !m.loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: m.loss });
        }
        let metric = if maximize { m.accuracy.unwrap_or(0.0) } else { m.loss };
        records.push(EpochRecord { epoch, train_loss: loss, val_metric: metric });

        let improved = if maximize { metric > best_metric } else { metric < best_metric };
        if improved {
            best_metric = metric;
            best_epoch = epoch;
            best = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    Ok((best, History { records, best_epoch, best_val_metric: best_metric, stopped_early }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::BasisSpec;
    use crate::graph::{grid_graph, normalized_adjacency};
    use crate::model::ModelOptions;
    use crate::optim::GroupConfig;
    use crate::rng::gaussian_matrix;
    use crate::spectral::laplacian_spectrum;

    fn regression_task<'a>(a: &'a SymmetricOperator, x: &'a DMatrix<f64>, y: DMatrix<f64>) -> Task<'a> {
        let n = x.nrows();
        Task {
            a_hat: a,
            x,
            target: Target::Regression(y),
            train: (0..n).collect(),
            val: vec![],
            test: vec![],
        }
    }

    #[test]
    fn patience_zero_stops_after_first_miss() {
        let g = grid_graph(3, 3).unwrap();
        let a = normalized_adjacency(&g);
        let x = gaussian_matrix(&mut rng(1), 9, 1, 1.0);
        let y = gaussian_matrix(&mut rng(2), 9, 1, 1.0);
        let task = regression_task(&a, &x, y);
        let model = LinearGnnModel::init(1, 1, BasisSpec::monomial(2), ModelOptions::default(), 0).unwrap();
        let cfg = TrainConfig {
            patience: 0,
            optimizer: AdamConfig {
                linear: GroupConfig::new(5.0, 0.0),
                coeffs: GroupConfig::new(5.0, 0.0),
                pcd: GroupConfig::new(5.0, 0.0),
            },
            ..Default::default()
        };
        let (_, hist) = train(model, &task, &cfg).unwrap();
        assert!(hist.stopped_early);
        let last = hist.records.len() - 1;
        let prior_best = hist.records[..last].iter().map(|r| r.val_metric).fold(f64::INFINITY, f64::min);
        assert!(hist.records[last].val_metric >= prior_best);
        assert!(hist.records[..last].windows(2).all(|w| w[1].val_metric < w[0].val_metric));
    }

    #[test]
    fn history_bounded_by_max_epochs() {
        let g = grid_graph(3, 3).unwrap();
        let a = normalized_adjacency(&g);
        let x = gaussian_matrix(&mut rng(1), 9, 1, 1.0);
        let task = regression_task(&a, &x, gaussian_matrix(&mut rng(3), 9, 1, 1.0));
        let model = LinearGnnModel::init(1, 1, BasisSpec::chebyshev(3), ModelOptions::default(), 0).unwrap();
        let cfg = TrainConfig { max_epochs: 17, ..Default::default() };
        let (_, hist) = train(model, &task, &cfg).unwrap();
        assert!(hist.records.len() <= 17);
    }

    #[test]
    fn fits_representable_target() {
        // Target is an exact degree-3 filter of the input on a 6x6 grid.
        let g = grid_graph(6, 6).unwrap();
        let a = normalized_adjacency(&g);
        let s = laplacian_spectrum(&g).unwrap();
        let x = gaussian_matrix(&mut rng(4), 36, 1, 1.0);
        let h = |l: f64| 0.5 - 0.8 * (1.0 - l) + 0.3 * (1.0 - l).powi(3);
        let y = s.apply_exact_filter_matrix(h, &x).unwrap();
        let task = regression_task(&a, &x, y);
        let model = LinearGnnModel::init(1, 1, BasisSpec::jacobi(0.0, 0.0, 3).unwrap(), ModelOptions::default(), 1).unwrap();
        let cfg = TrainConfig {
            optimizer: AdamConfig {
                linear: GroupConfig::new(0.01, 0.0),
                coeffs: GroupConfig::new(0.05, 0.0),
                pcd: GroupConfig::new(0.01, 0.0),
            },
            ..Default::default()
        };
        let (best, hist) = train(model, &task, &cfg).unwrap();
        assert!(hist.records.len() <= 1000);
        let m = evaluate(&best, &Inputs::new(&a, &x), &task.target, &task.train, LossKind::Squared).unwrap();
        assert!(m.loss <= 1e-6, "loss {}", m.loss);
    }

    #[test]
    fn divergence_is_reported() {
        let g = grid_graph(2, 2).unwrap();
        let a = normalized_adjacency(&g);
        let x = DMatrix::from_element(4, 1, f64::MAX);
        let task = regression_task(&a, &x, DMatrix::zeros(4, 1));
        let model = LinearGnnModel::init(1, 1, BasisSpec::monomial(1), ModelOptions::default(), 0).unwrap();
        let err = train(model, &task, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch: 0, .. }));
    }

    #[test]
    fn overlapping_masks_rejected() {
        let g = grid_graph(2, 2).unwrap();
        let a = normalized_adjacency(&g);
        let x = DMatrix::from_element(4, 1, 1.0);
        let mut task = regression_task(&a, &x, DMatrix::zeros(4, 1));
        task.val = vec![0];
        let model = LinearGnnModel::init(1, 1, BasisSpec::monomial(1), ModelOptions::default(), 0).unwrap();
        assert!(matches!(train(model, &task, &TrainConfig::default()), Err(Error::Precondition(_))));
    }
}
