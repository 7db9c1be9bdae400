use rand::seq::SliceRandom;
use sfl_core::bases::BasisSpec;
use sfl_core::benchmark::{run_node_classification, ClassifierConfig, SplitRatios};
use sfl_core::graph::{sbm_generate, SbmParams};
use sfl_core::model::{LossKind, ModelOptions};
use sfl_core::optim::{AdamConfig, GroupConfig};
use sfl_core::rng::rng;
use sfl_core::train::TrainConfig;

fn train_cfg() -> TrainConfig {
    TrainConfig {
        optimizer: AdamConfig {
            linear: GroupConfig::new(0.05, 5e-4),
            coeffs: GroupConfig::new(0.05, 0.0),
            pcd: GroupConfig::new(0.05, 0.0),
        },
        max_epochs: 300,
        patience: 100,
        loss: LossKind::SoftmaxCe,
        ..Default::default()
    }
}

fn classifier(spec: BasisSpec, options: ModelOptions, repeats: usize, seed: u64) -> ClassifierConfig {
    ClassifierConfig { spec, options, train: train_cfg(), splits: SplitRatios::default(), repeats, seed }
}

#[test]
fn permuted_labels_give_chance_accuracy() {
    let mut p = SbmParams::uniform(3, 60, 0.2, 0.02);
    p.seed = 3;
    let g = sbm_generate(&p).unwrap();
    let mut labels = g.labels().unwrap().to_vec();
    labels.shuffle(&mut rng(17));
    let g = g.with_labels(labels).unwrap();
    let cfg = classifier(BasisSpec::jacobi(1.0, 1.0, 5).unwrap(), ModelOptions { pcd: Some(1.0), bias: true, unifilter: false }, 10, 5);
    let r = run_node_classification(&g, &cfg).unwrap();
    // 360 test predictions in total: four binomial standard deviations is about 0.1.
    assert!((r.mean_accuracy - 1.0 / 3.0).abs() <= 0.1, "{r:?}");
}

#[test]
fn learned_filter_beats_appnp_under_heterophily() {
    let mut p = SbmParams::uniform(2, 60, 0.02, 0.2);
    p.noise = 1.5;
    p.seed = 8;
    let g = sbm_generate(&p).unwrap();
    let options = ModelOptions { bias: true, ..Default::default() };
    let jacobi = run_node_classification(
        &g,
        &classifier(BasisSpec::jacobi(1.0, 1.0, 6).unwrap(), ModelOptions { pcd: Some(1.0), ..options }, 5, 11),
    )
    .unwrap();
    let appnp = run_node_classification(&g, &classifier(BasisSpec::fixed_appnp(0.1, 6).unwrap(), options, 5, 11)).unwrap();
    assert_eq!(jacobi.splits_hash(), appnp.splits_hash());
    assert!(jacobi.mean_accuracy > appnp.mean_accuracy, "jacobi {} vs appnp {}", jacobi.mean_accuracy, appnp.mean_accuracy);
}

#[test]
fn checkpoint_reproduces_test_accuracy() {
    let mut p = SbmParams::uniform(3, 20, 0.3, 0.05);
    p.noise = 0.5;
    p.seed = 2;
    let g = sbm_generate(&p).unwrap();
    let cfg = classifier(BasisSpec::jacobi(1.0, 1.0, 4).unwrap(), ModelOptions { pcd: Some(1.0), ..Default::default() }, 1, 4);
    let r = run_node_classification(&g, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    r.checkpoint.clone().unwrap().save(&path).unwrap();
    let model = sfl_core::model::Checkpoint::load(&path).unwrap().into_model().unwrap();
    let (split, _) = sfl_core::benchmark::classification::random_split(
        g.labels().unwrap(),
        cfg.splits,
        sfl_core::rng::derive_seed(cfg.seed, &[0, 0]),
    )
    .unwrap();
    let a = sfl_core::graph::normalized_adjacency(&g);
    let z = model.forward(&a, g.features().unwrap()).unwrap();
    let acc = sfl_core::model::accuracy(&z, g.labels().unwrap(), &split.test);
    assert_eq!(acc, r.repeats[0].test_accuracy);
}
