//! Oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sfl_core::bases::BasisSpec;
use sfl_core::graph::{erdos_renyi, normalized_adjacency, path_graph};
use sfl_core::model::{DropoutMasks, Grads, Inputs, LinearGnnModel, LossKind, ModelOptions, Target};
use sfl_core::optim::{Adam, AdamConfig, GroupConfig};
use sfl_core::rng::{derive_seed, gaussian_matrix, rng};

const STEP: f64 = 1e-5;

fn perturbed(m: &LinearGnnModel, group: usize, i: usize, delta: f64) -> LinearGnnModel {
    let mut c = m.clone();
    match group {
        0 => c.weight.as_mut_slice()[i] += delta,
        1 => c.bias.as_mut().unwrap().as_mut_slice()[i] += delta,
        2 => c.coeffs.as_mut_slice()[i] += delta,
        _ => c.pcd.as_mut().unwrap().eta[i] += delta,
    }
    c
}

fn group_len(m: &LinearGnnModel, group: usize) -> usize {
    match group {
        0 => m.weight.len(),
        1 => m.bias.as_ref().map_or(0, |b| b.len()),
        2 => m.coeffs.len(),
        _ => m.pcd.as_ref().map_or(0, |p| p.eta.len()),
    }
}

fn analytic(g: &Grads, group: usize) -> Vec<f64> {
    match group {
        0 => g.weight.as_slice().to_vec(),
        1 => g.bias.as_ref().map_or(vec![], |b| b.as_slice().to_vec()),
        2 => g.coeffs.as_slice().to_vec(),
        _ => g.eta.clone().unwrap_or_default(),
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Largest per-group relative error between analytic and central-difference gradients.
pub fn gradient_error(instance: u64, loss: LossKind, pcd: bool, bias: bool) -> f64 {
    let mut r = rng(derive_seed(instance, &[loss as u64, pcd as u64, bias as u64]));
    let n = r.random_range(5..40);
    let d = r.random_range(1..4);
    let d_out = r.random_range(2..4);
    let degree = r.random_range(1..6);
    let g = erdos_renyi(n, 0.25, instance).unwrap();
    let a_hat = normalized_adjacency(&g);
    let x = gaussian_matrix(&mut r, n, d, 1.0);
    let spec = if pcd {
        BasisSpec::jacobi(r.random_range(-0.5..2.0), r.random_range(-0.5..2.0), degree).unwrap()
    } else {
        match instance % 4 {
            0 => BasisSpec::monomial(degree),
            1 => BasisSpec::chebyshev(degree),
            2 => BasisSpec::bernstein(degree),
            _ => BasisSpec::jacobi(1.0, -0.5, degree).unwrap(),
        }
    };
    let opts = ModelOptions {
        bias,
        pcd: pcd.then(|| r.random_range(0.5..2.0)),
        unifilter: instance % 5 == 0,
    };
    let mut model = LinearGnnModel::init(d, d_out, spec.clone(), opts, instance).unwrap();
    model.coeffs = gaussian_matrix(&mut r, model.coeffs.nrows(), model.coeffs.ncols(), 0.5);
    if let Some(b) = model.bias.as_mut() {
        *b = DVector::from_fn(d_out, |_, _| r.random_range(-0.5..0.5));
    }
    if let Some(p) = model.pcd.as_mut() {
        p.eta = (0..degree).map(|_| r.random_range(-1.0..1.0)).collect();
    }
    let target = match loss {
        LossKind::Squared => Target::Regression(gaussian_matrix(&mut r, n, d_out, 1.0)),
        LossKind::SoftmaxCe => Target::Classes((0..n).map(|_| r.random_range(0..d_out)).collect()),
    };
    let mut mask: Vec<usize> = (1..n).filter(|_| r.random_bool(0.6)).collect();
    mask.push(0);
    let dropout = (instance % 2 == 1).then(|| DropoutMasks::sample(&mut r, (n, d), (n, d_out), 0.3, 0.2).unwrap());
    let inputs = if dropout.is_none() && instance % 3 == 0 {
        Inputs::with_basis_cache(&a_hat, &x, &spec).unwrap()
    } else {
        Inputs::new(&a_hat, &x)
    };
    let inp = &inputs;

    let eval = |m: &LinearGnnModel| m.loss_and_grads(inp, &target, &mask, loss, dropout.as_ref()).unwrap();
    let (_, grads) = eval(&model);
    let mut worst: f64 = 0.0;
    let groups: &[usize] = if model.spec.is_learnable() { &[0, 1, 2, 3] } else { &[0, 1, 3] };
    for &group in groups {
        let len = group_len(&model, group);
        if len == 0 {
            continue;
        }
        let fd: Vec<f64> = (0..len)
            .map(|i| {
                let up = eval(&perturbed(&model, group, i, STEP)).0;
                let down = eval(&perturbed(&model, group, i, -STEP)).0;
                (up - down) / (2.0 * STEP)
            })
            .collect();
        worst = worst.max(rel_err(&analytic(&grads, group), &fd));
    }
    worst
}

pub fn p2_two_channel() -> (sfl_core::SymmetricOperator, DMatrix<f64>, Target) {
    let a = normalized_adjacency(&path_graph(2));
    let x = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
    let y = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, -0.5]);
    (a, x, Target::Regression(y))
}

/// Unifilter output is `g(L̂) x wᵀ`: a rank-one matrix in the spectral domain
/// whose entries are `g(λ_i) x̃_i w_l`. The best rank-one approximation of
/// the spectral target (Eckart-Young) bounds every achievable loss.
pub fn unifilter_optimum() -> f64 {
    let s = sfl_core::spectral::laplacian_spectrum(&path_graph(2)).unwrap();
    let (_, _, Target::Regression(y)) = p2_two_channel() else { unreachable!() };
    let yt = s.gft(&y).unwrap();
    let sv = yt.svd(false, false).singular_values;
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    0.5 * sv[1..].iter().map(|v| v * v).sum::<f64>()
}

/// Final squared loss after `steps` Adam steps at learning rate 0.01 on the
/// two-channel task.
pub fn train_p2(unifilter: bool, steps: usize) -> f64 {
    let (a, x, y) = p2_two_channel();
    let inp = Inputs::new(&a, &x);
    let all = [0usize, 1];
    let opts = ModelOptions { unifilter, ..Default::default() };
    let mut m = LinearGnnModel::init(1, 2, BasisSpec::monomial(1), opts, 3).unwrap();
    let cfg = AdamConfig {
        linear: GroupConfig::new(0.01, 0.0),
        coeffs: GroupConfig::new(0.01, 0.0),
        pcd: GroupConfig::new(0.0, 0.0),
    };
    let mut adam = Adam::new(&m, cfg);
    let mut loss = f64::INFINITY;
    for _ in 0..steps {
        let (l, g) = m.loss_and_grads(&inp, &y, &all, LossKind::Squared, None).unwrap();
        loss = l;
        adam.step(&mut m, &g);
    }
    loss
}
