//! Node classification with repeated random splits, and the ablation table.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bases::BasisSpec;
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph};
use crate::model::{Checkpoint, Inputs, LinearGnnModel, LossKind, ModelOptions, Target};
use crate::rng::{derive_seed, rng};
use crate::train::{evaluate, train, Task, TrainConfig};

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959963984540054;
const MAX_SPLIT_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.6, val: 0.2, test: 0.2 }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(*p >= 0.0)) || self.train <= 0.0 || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "split ratios must be non-negative, give train > 0 and sum to 1, got {}/{}/{}",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// SHA-256 over the three index lists.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.train, &self.val, &self.test] {
            for i in part {
                h.update((*i as u64).to_le_bytes());
            }
            h.update(u64::MAX.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Random split of `0..labels.len()` by `ratios`, redrawn until every class
/// occurs in the training part. Returns the split and the number of redraws.
pub fn random_split(labels: &[usize], ratios: SplitRatios, seed: u64) -> Result<(Split, u64)> {
    ratios.validate()?;
    let n = labels.len();
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let n_train = ((ratios.train * n as f64).round() as usize).clamp(1, n);
    let n_val = ((ratios.val * n as f64).round() as usize).min(n - n_train);
    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng(derive_seed(seed, &[attempt])));
        let mut train = perm[..n_train].to_vec();
        let mut seen = vec![false; classes];
        train.iter().for_each(|&i| seen[labels[i]] = true);
        if seen.iter().any(|s| !s) {
            log::info!("split attempt {attempt} misses a class in training; resampling");
            continue;
        }
        let mut val = perm[n_train..n_train + n_val].to_vec();
        let mut test = perm[n_train + n_val..].to_vec();
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        return Ok((Split { train, val, test }, attempt));
    }
    Err(Error::Precondition(format!(
        "no split with every class in training after {MAX_SPLIT_ATTEMPTS} draws"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub spec: BasisSpec,
    pub options: ModelOptions,
    pub train: TrainConfig,
    pub splits: SplitRatios,
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub split_hash: String,
    pub resamples: u64,
    pub best_epoch: usize,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub basis: String,
    pub repeats: Vec<RepeatResult>,
    pub mean_accuracy: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95: f64,
    /// Checkpoint of the first repeat's best model.
    #[serde(skip)]
    pub checkpoint: Option<Checkpoint>,
}

impl ClassificationReport {
    /// Hash over every repeat's split, in order.
    pub fn splits_hash(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.repeats {
            h.update(r.split_hash.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Mean and normal-approximation 95% half-width (sample standard deviation).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, Z95 * (var / m).sqrt())
}

/// Train on `repeats` fresh splits and report test accuracy.
pub fn run_node_classification(g: &Graph, cfg: &ClassifierConfig) -> Result<ClassificationReport> {
    let x = g.features().ok_or_else(|| Error::Precondition("node classification needs node features".into()))?;
    let labels = g.labels().ok_or_else(|| Error::Precondition("node classification needs node labels".into()))?;
    let classes = g.num_classes().unwrap_or(0);
    if cfg.repeats == 0 {
        return Err(Error::InvalidParameter("at least one repeat is required".into()));
    }
    let a_hat = normalized_adjacency(g);
    let mut train_cfg = cfg.train;
    train_cfg.loss = LossKind::SoftmaxCe;
    let config_hash = crate::model::config_hash(cfg)?;

    let mut repeats = Vec::with_capacity(cfg.repeats);
    let mut checkpoint = None;
    for repeat in 0..cfg.repeats {
        let (split, resamples) = random_split(labels, cfg.splits, derive_seed(cfg.seed, &[0, repeat as u64]))?;
        let model_seed = derive_seed(cfg.seed, &[1, repeat as u64]);
        let model = LinearGnnModel::init(x.ncols(), classes, cfg.spec.clone(), cfg.options, model_seed)?;
        let task = Task {
            a_hat: &a_hat,
            x,
            target: Target::Classes(labels.to_vec()),
            train: split.train.clone(),
            val: split.val.clone(),
            test: split.test.clone(),
        };
        train_cfg.seed = derive_seed(cfg.seed, &[2, repeat as u64]);
        let (best, hist) = train(model, &task, &train_cfg)?;
        let inp = Inputs::new(&a_hat, x);
        let acc = |mask: &[usize]| -> Result<f64> {
            if mask.is_empty() {
                return Ok(f64::NAN);
            }
            Ok(evaluate(&best, &inp, &task.target, mask, LossKind::SoftmaxCe)?.accuracy.unwrap_or(0.0))
        };
        let test_accuracy = acc(&split.test)?;
        let val_accuracy = acc(&split.val)?;
        if repeat == 0 {
            checkpoint = Some(best.to_checkpoint(model_seed, config_hash.clone()));
        }
        repeats.push(RepeatResult {
            repeat,
            split_hash: split.hash(),
            resamples,
            best_epoch: hist.best_epoch,
            val_accuracy,
            test_accuracy,
        });
    }
    let accs: Vec<f64> = repeats.iter().map(|r| r.test_accuracy).collect();
    let (mean_accuracy, ci95) = mean_ci95(&accs);
    Ok(ClassificationReport { basis: cfg.spec.label(), repeats, mean_accuracy, ci95, checkpoint })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    /// Jacobi basis with coefficient decomposition.
    JacobiConv,
    /// As above, one filter shared by every output channel.
    UniFilter,
    NoPcd,
    Monomial,
    Chebyshev,
    Bernstein,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 6] = [
        AblationVariant::JacobiConv,
        AblationVariant::UniFilter,
        AblationVariant::NoPcd,
        AblationVariant::Monomial,
        AblationVariant::Chebyshev,
        AblationVariant::Bernstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationVariant::JacobiConv => "jacobiconv",
            AblationVariant::UniFilter => "unifilter",
            AblationVariant::NoPcd => "no_pcd",
            AblationVariant::Monomial => "monomial",
            AblationVariant::Chebyshev => "chebyshev",
            AblationVariant::Bernstein => "bernstein",
        }
    }

    fn model(self, base: &AblationConfig) -> Result<(BasisSpec, ModelOptions)> {
        let k = base.degree;
        let jacobi = BasisSpec::jacobi(base.a, base.b, k)?;
        let bias = base.bias;
        let pcd = Some(base.gamma_cap);
        Ok(match self {
            AblationVariant::JacobiConv => (jacobi, ModelOptions { bias, pcd, unifilter: false }),
            AblationVariant::UniFilter => (jacobi, ModelOptions { bias, pcd, unifilter: true }),
            AblationVariant::NoPcd => (jacobi, ModelOptions { bias, pcd: None, unifilter: false }),
            AblationVariant::Monomial => (BasisSpec::monomial(k), ModelOptions { bias, ..Default::default() }),
            AblationVariant::Chebyshev => (BasisSpec::chebyshev(k), ModelOptions { bias, ..Default::default() }),
            AblationVariant::Bernstein => (BasisSpec::bernstein(k), ModelOptions { bias, ..Default::default() }),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub degree: usize,
    pub a: f64,
    pub b: f64,
    pub gamma_cap: f64,
    pub bias: bool,
    pub train: TrainConfig,
    pub splits: SplitRatios,
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub dataset: String,
    pub variant: AblationVariant,
    pub mean_accuracy: f64,
    pub ci95: f64,
    pub accuracies: Vec<f64>,
    pub splits_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub config: AblationConfig,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    /// `dataset,variant,repeat,accuracy`, one row per (variant, repeat).
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dataset", "variant", "repeat", "accuracy"])?;
        for r in &self.rows {
            for (i, a) in r.accuracies.iter().enumerate() {
                w.write_record([r.dataset.clone(), r.variant.name().to_string(), i.to_string(), a.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Every variant on every dataset with the same splits and seeds.
pub fn ablation_suite(datasets: &[(&str, &Graph)], cfg: &AblationConfig) -> Result<AblationReport> {
    let mut rows = Vec::new();
    for (name, g) in datasets {
        for variant in AblationVariant::ALL {
            let (spec, options) = variant.model(cfg)?;
            let c = ClassifierConfig { spec, options, train: cfg.train, splits: cfg.splits, repeats: cfg.repeats, seed: cfg.seed };
            let rep = run_node_classification(g, &c)?;
            rows.push(AblationRow {
                dataset: name.to_string(),
                variant,
                mean_accuracy: rep.mean_accuracy,
                ci95: rep.ci95,
                accuracies: rep.repeats.iter().map(|r| r.test_accuracy).collect(),
                splits_hash: rep.splits_hash(),
            });
        }
    }
    Ok(AblationReport { config: cfg.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sbm_generate, SbmParams};
    use crate::optim::{AdamConfig, GroupConfig};
    use nalgebra::DMatrix;

    fn labelled_sbm(p_in: f64, p_out: f64, seed: u64) -> Graph {
        let mut p = SbmParams::uniform(3, 20, p_in, p_out);
        p.seed = seed;
        sbm_generate(&p).unwrap()
    }

    fn quick_train() -> TrainConfig {
        let g = GroupConfig::new(0.05, 0.0);
        TrainConfig { optimizer: AdamConfig { linear: g, coeffs: g, pcd: g }, max_epochs: 200, patience: 50, ..Default::default() }
    }

    #[test]
    fn split_respects_ratios_and_classes() {
        let labels: Vec<usize> = (0..50).map(|i| i % 5).collect();
        let (s, _) = random_split(&labels, SplitRatios::default(), 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (30, 10, 10));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_eq!(random_split(&labels, SplitRatios::default(), 3).unwrap().0.hash(), s.hash());
        assert_ne!(random_split(&labels, SplitRatios::default(), 4).unwrap().0.hash(), s.hash());
    }

    #[test]
    fn rare_class_forces_resampling() {
        let mut labels = vec![0usize; 20];
        labels[7] = 1;
        let (s, _) = random_split(&labels, SplitRatios::default(), 0).unwrap();
        assert!(s.train.contains(&7));
    }

    #[test]
    fn interval_formula() {
        let (m, h) = mean_ci95(&[0.5, 0.7, 0.6]);
        assert_close!(m, 0.6, 1e-15);
        assert_close!(h, Z95 * (0.01f64 / 3.0).sqrt(), 1e-15);
        assert_eq!(mean_ci95(&[0.3]).1, 0.0);
    }

    #[test]
    fn separable_sbm_is_solved() {
        let g = labelled_sbm(1.0, 0.0, 1);
        let cfg = ClassifierConfig {
            spec: BasisSpec::jacobi(1.0, 1.0, 3).unwrap(),
            options: ModelOptions { pcd: Some(1.0), ..Default::default() },
            train: quick_train(),
            splits: SplitRatios::default(),
            repeats: 3,
            seed: 2,
        };
        let r = run_node_classification(&g, &cfg).unwrap();
        assert_eq!(r.mean_accuracy, 1.0);
        assert!(r.checkpoint.is_some());
    }

    #[test]
    fn missing_labels_rejected() {
        let g = crate::graph::path_graph(4).with_features(DMatrix::zeros(4, 1)).unwrap();
        let cfg = ClassifierConfig {
            spec: BasisSpec::monomial(2),
            options: ModelOptions::default(),
            train: quick_train(),
            splits: SplitRatios::default(),
            repeats: 1,
            seed: 0,
        };
        assert!(matches!(run_node_classification(&g, &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn ablation_rows_share_splits() {
        let g = labelled_sbm(0.5, 0.05, 4);
        let cfg = AblationConfig {
            degree: 3,
            a: 1.0,
            b: 1.0,
            gamma_cap: 1.0,
            bias: true,
            train: TrainConfig { max_epochs: 30, ..quick_train() },
            splits: SplitRatios::default(),
            repeats: 2,
            seed: 9,
        };
        let r = ablation_suite(&[("sbm", &g), ("sbm2", &g)], &cfg).unwrap();
        assert_eq!(r.rows.len(), 12);
        assert!(r.rows.iter().all(|row| row.splits_hash == r.rows[0].splits_hash));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 12 * 2);
    }
}
