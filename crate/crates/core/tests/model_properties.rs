mod common;

use common::{train_p2, unifilter_optimum};
use sfl_core::bases::{BasisFamily, BasisSpec};
use sfl_core::graph::{erdos_renyi, normalized_adjacency};
use sfl_core::model::{Inputs, LinearGnnModel, LossKind, ModelOptions, Pcd, Target};
use sfl_core::optim::{Adam, AdamConfig, GroupConfig};
use sfl_core::rng::{gaussian_matrix, rng};

#[test]
fn unifilter_cannot_fit_two_channel_target() {
    let optimum = unifilter_optimum();
    assert!((optimum - 0.25).abs() < 1e-12);
    let uni = train_p2(true, 3000);
    assert!(uni >= optimum - 1e-9, "unifilter loss {uni}");
    let multi = train_p2(false, 3000);
    assert!(multi <= 1e-8, "multi-filter loss {multi}");
}

#[test]
fn pcd_with_unit_gammas_follows_plain_trajectory() {
    let g = erdos_renyi(20, 0.3, 4).unwrap();
    let a = normalized_adjacency(&g);
    let x = gaussian_matrix(&mut rng(1), 20, 3, 1.0);
    let y = Target::Regression(gaussian_matrix(&mut rng(2), 20, 2, 1.0));
    let mask: Vec<usize> = (0..20).collect();
    let spec = BasisSpec::jacobi(1.0, 0.5, 5).unwrap();
    let opts = ModelOptions { bias: true, ..Default::default() };
    let mut plain = LinearGnnModel::init(3, 2, spec, opts, 5).unwrap();
    plain.coeffs = gaussian_matrix(&mut rng(6), 6, 2, 0.5);
    let mut pcd = plain.clone();
    pcd.pcd = Some(Pcd { eta: vec![0.5f64.atanh(); 5], gamma_cap: 2.0 });
    assert!(matches!(pcd.spec.family, BasisFamily::Jacobi { .. }));

    let cfg = AdamConfig {
        linear: GroupConfig::new(0.01, 1e-4),
        coeffs: GroupConfig::new(0.02, 0.0),
        pcd: GroupConfig::new(0.0, 0.0),
    };
    let (mut opt_a, mut opt_b) = (Adam::new(&plain, cfg), Adam::new(&pcd, cfg));
    let inp = Inputs::new(&a, &x);
    for _ in 0..5 {
        let (_, ga) = plain.loss_and_grads(&inp, &y, &mask, LossKind::Squared, None).unwrap();
        let (_, gb) = pcd.loss_and_grads(&inp, &y, &mask, LossKind::Squared, None).unwrap();
        opt_a.step(&mut plain, &ga);
        opt_b.step(&mut pcd, &gb);
        assert!((&plain.weight - &pcd.weight).amax() <= 1e-10);
        assert!((&plain.coeffs - &pcd.coeffs).amax() <= 1e-10);
        assert!((plain.effective_coeffs() - pcd.effective_coeffs()).amax() <= 1e-10);
    }
}
