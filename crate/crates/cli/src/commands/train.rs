use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sfl_core::bases::{FamilyName, DEFAULT_DEGREE};
use sfl_core::benchmark::{ablation_suite, run_node_classification, AblationConfig, ClassifierConfig, SplitRatios};
use sfl_core::model::{LossKind, ModelOptions};
use sfl_core::optim::{AdamConfig, GroupConfig};
use sfl_core::train::TrainConfig;

use super::{load_graph, parse_list, with_provenance, write_json};
use crate::config::{require, resolve, GlobalOptions};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// monomial, chebyshev, bernstein, jacobi, appnp or sgc.
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    /// Jacobi exponents.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// APPNP teleport probability.
    #[arg(long)]
    alpha: Option<f64>,
    /// Enable polynomial coefficient decomposition (Jacobi only).
    #[arg(long)]
    pcd: bool,
    /// Upper bound γ' of each learnable PCD scale.
    #[arg(long)]
    gamma_prime: Option<f64>,
    /// Share one filter across all output channels.
    #[arg(long)]
    unifilter: bool,
    /// Add a per-class bias.
    #[arg(long)]
    bias: bool,
    #[arg(long)]
    lr_w: Option<f64>,
    #[arg(long)]
    lr_alpha: Option<f64>,
    #[arg(long)]
    lr_pcd: Option<f64>,
    #[arg(long)]
    wd_w: Option<f64>,
    #[arg(long)]
    wd_alpha: Option<f64>,
    #[arg(long)]
    wd_pcd: Option<f64>,
    #[arg(long)]
    dropout_x: Option<f64>,
    #[arg(long)]
    dropout_h: Option<f64>,
    /// Train, validation and test fractions.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Run the six-variant ablation instead of a single model.
    #[arg(long)]
    ablation: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub graph: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub basis: String,
    pub degree: usize,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub pcd: bool,
    pub gamma_prime: f64,
    pub unifilter: bool,
    pub bias: bool,
    pub lr_w: f64,
    pub lr_alpha: f64,
    pub lr_pcd: f64,
    pub wd_w: f64,
    pub wd_alpha: f64,
    pub wd_pcd: f64,
    pub dropout_x: f64,
    pub dropout_h: f64,
    pub split: String,
    pub repeats: usize,
    pub epochs: usize,
    pub patience: usize,
    pub ablation: bool,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Settings {
            graph: None,
            features: None,
            labels: None,
            basis: "jacobi".into(),
            degree: DEFAULT_DEGREE,
            a: 1.0,
            b: 1.0,
            alpha: 0.1,
            pcd: false,
            gamma_prime: 1.0,
            unifilter: false,
            bias: false,
            lr_w: 0.05,
            lr_alpha: 0.05,
            lr_pcd: 0.05,
            wd_w: 5e-4,
            wd_alpha: 0.0,
            wd_pcd: 0.0,
            dropout_x: 0.0,
            dropout_h: 0.0,
            split: "0.6,0.2,0.2".into(),
            repeats: 10,
            epochs: t.max_epochs,
            patience: t.patience,
            ablation: false,
            out: None,
        }
    }
}

impl Settings {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: AdamConfig {
                linear: GroupConfig::new(self.lr_w, self.wd_w),
                coeffs: GroupConfig::new(self.lr_alpha, self.wd_alpha),
                pcd: GroupConfig::new(self.lr_pcd, self.wd_pcd),
            },
            dropout_x: self.dropout_x,
            dropout_hidden: self.dropout_h,
            max_epochs: self.epochs,
            patience: self.patience,
            seed,
            loss: LossKind::SoftmaxCe,
        }
    }

    fn splits(&self) -> Result<SplitRatios> {
        let v: Vec<f64> = parse_list(&self.split)?;
        let [train, val, test] = v[..] else {
            bail!("--split needs three fractions, got {:?}", self.split);
        };
        let r = SplitRatios { train, val, test };
        r.validate()?;
        Ok(r)
    }
}

pub fn run(args: &Args, global: &GlobalOptions) -> Result<()> {
    let (s, rc): (Settings, _) = resolve("train", args, global)?;
    let out = require(&s.out, "out")?;
    let features = require(&s.features, "features")?;
    let labels = require(&s.labels, "labels")?;
    let g = load_graph(require(&s.graph, "graph")?, Some(features), Some(labels))?;
    let train = s.train_config(rc.seed);
    let splits = s.splits()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    if s.ablation {
        let cfg = AblationConfig {
            degree: s.degree,
            a: s.a,
            b: s.b,
            gamma_cap: s.gamma_prime,
            bias: s.bias,
            train,
            splits,
            repeats: s.repeats,
            seed: rc.seed,
        };
        let name = s.graph.as_ref().and_then(|p| p.file_stem()).map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let report = ablation_suite(&[(name.as_str(), &g)], &cfg)?;
        report.write_csv(fs::File::create(out.join("ablation.csv"))?)?;
        write_json(&out.join("ablation.json"), &with_provenance(&report, &rc)?)?;
        for r in &report.rows {
            println!("{:<12} {:.4} ± {:.4}", r.variant.name(), r.mean_accuracy, r.ci95);
        }
        return Ok(());
    }

    let family: FamilyName = s.basis.parse()?;
    let spec = family.spec(s.degree, s.a, s.b, s.alpha)?;
    let options = ModelOptions { bias: s.bias, pcd: s.pcd.then_some(s.gamma_prime), unifilter: s.unifilter };
    let cfg = ClassifierConfig { spec, options, train, splits, repeats: s.repeats, seed: rc.seed };
    let mut report = run_node_classification(&g, &cfg)?;
    if let Some(ck) = report.checkpoint.as_mut() {
        ck.config_hash = rc.hash()?;
        ck.save(out.join("checkpoint.json"))?;
    }

    let mut w = String::from("repeat,split_hash,val_accuracy,test_accuracy\n");
    for r in &report.repeats {
        w += &format!("{},{},{},{}\n", r.repeat, r.split_hash, r.val_accuracy, r.test_accuracy);
    }
    fs::write(out.join("accuracies.csv"), w)?;
    let body = json!({ "classification": report, "splits_hash": report.splits_hash() });
    write_json(&out.join("report.json"), &with_provenance(&body, &rc)?)?;
    println!("{}: test accuracy {:.4} ± {:.4} over {} repeats", report.basis, report.mean_accuracy, report.ci95, s.repeats);
    Ok(())
}
