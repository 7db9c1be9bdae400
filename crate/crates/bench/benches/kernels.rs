use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sfl_core::bases::{apply_basis, BasisSpec};
use sfl_core::graph::{erdos_renyi, grid_graph, normalized_adjacency, sbm_generate, SbmParams};
use sfl_core::model::{Inputs, LinearGnnModel, LossKind, ModelOptions, Target};
use sfl_core::rng::{gaussian_vector, rng};
use sfl_core::spectral::laplacian_spectrum;

fn bases(c: &mut Criterion) {
    let g = erdos_renyi(2000, 5.0 / 2000.0, 1).unwrap();
    let a = normalized_adjacency(&g);
    let h = gaussian_vector(&mut rng(2), g.n(), 1.0);
    let mut group = c.benchmark_group("apply_basis_n2000_k10");
    for spec in [
        BasisSpec::monomial(10),
        BasisSpec::chebyshev(10),
        BasisSpec::bernstein(10),
        BasisSpec::jacobi(1.0, 1.0, 10).unwrap(),
    ] {
        group.bench_function(BenchmarkId::from_parameter(spec.label()), |b| {
            b.iter(|| apply_basis(&spec, &a, black_box(&h), None).unwrap())
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian_spectrum");
    group.sample_size(10);
    for side in [8, 16] {
        let g = grid_graph(side, side).unwrap();
        group.bench_with_input(BenchmarkId::new("grid", side * side), &g, |b, g| b.iter(|| laplacian_spectrum(g).unwrap()));
    }
    group.finish();
}

fn training_step(c: &mut Criterion) {
    let mut p = SbmParams::uniform(5, 200, 0.05, 0.005);
    p.noise = 0.5;
    let g = sbm_generate(&p).unwrap();
    let a = normalized_adjacency(&g);
    let x = g.features().unwrap();
    let spec = BasisSpec::jacobi(1.0, 1.0, 10).unwrap();
    let model = LinearGnnModel::init(x.ncols(), 5, spec.clone(), ModelOptions { pcd: Some(1.0), ..Default::default() }, 3).unwrap();
    let inp = Inputs::with_basis_cache(&a, x, &spec).unwrap();
    let target = Target::Classes(g.labels().unwrap().to_vec());
    let mask: Vec<usize> = (0..g.n()).step_by(2).collect();
    c.bench_function("loss_and_grads_sbm1000_k10", |b| {
        b.iter(|| model.loss_and_grads(&inp, &target, &mask, LossKind::SoftmaxCe, None).unwrap())
    });
    c.bench_function("forward_sbm1000_k10", |b| b.iter(|| model.forward(&a, black_box(x)).unwrap()));
}

criterion_group!(benches, bases, eigen, training_step);
criterion_main!(benches);
