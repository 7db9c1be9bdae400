//! A graph and features for which adding a bias to `XW` still leaves a
//! frequency direction unreachable.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, gaussian_matrix, gaussian_vector, rng};

#[derive(Debug, Clone)]
pub struct BiasCounterexample {
    pub graph: Graph,
    pub x: DMatrix<f64>,
    /// Unit vector orthogonal to `XW + 1bᵀ` for every `W`, `b`.
    pub witness: DVector<f64>,
}

/// Nodes 0 and 1 isolated, nodes `2..n` a path; `X = (1, 1, 2, …, n−1)ᵀ`.
/// The witness `(e_0 − e_1)/√2` is an eigenvector of the normalized
/// Laplacian (both isolated nodes share its eigenvalue) that no affine
/// function of the features can excite.
pub fn bias_counterexample(n: usize) -> Result<BiasCounterexample> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("bias counterexample needs n >= 4, got {n}")));
    }
    let graph = Graph::from_edges(n, (2..n - 1).map(|u| (u, u + 1)))?;
    let x = DMatrix::from_fn(n, 1, |i, _| i.max(1) as f64);
    let mut witness = DVector::zeros(n);
    witness[0] = 0.5f64.sqrt();
    witness[1] = -(0.5f64.sqrt());
    Ok(BiasCounterexample { graph, x, witness })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub n: usize,
    pub draws: usize,
    pub seed: u64,
    /// Largest `‖uᵀ(XW + 1bᵀ)‖_∞` over the draws.
    pub max_projection: f64,
    pub tolerance: f64,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.max_projection <= self.tolerance
    }
}

/// Project `XW + 1bᵀ` onto the witness for `draws` Gaussian `(W, b)` with
/// `d_out` output columns.
pub fn witness_check(c: &BiasCounterexample, draws: usize, d_out: usize, seed: u64) -> WitnessReport {
    let n = c.x.nrows();
    let mut max_projection: f64 = 0.0;
    for t in 0..draws {
        let mut r = rng(derive_seed(seed, &[t as u64]));
        let w = gaussian_matrix(&mut r, c.x.ncols(), d_out, 1.0);
        let b = gaussian_vector(&mut r, d_out, 1.0);
        let mut out = &c.x * w;
        for mut row in out.row_iter_mut() {
            row += b.transpose();
        }
        max_projection = max_projection.max((c.witness.transpose() * out).amax());
    }
    WitnessReport { n, draws, seed, max_projection, tolerance: 1e-12 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::laplacian_spectrum;

    #[test]
    fn four_node_construction() {
        let c = bias_counterexample(4).unwrap();
        assert_eq!(c.x.as_slice(), &[1.0, 1.0, 2.0, 3.0]);
        assert_eq!(c.graph.edge_count(), 1);
        assert_eq!(c.graph.degree(0), 0);
        assert_eq!(c.graph.degree(1), 0);
        assert_eq!((c.witness.transpose() * &c.x)[0], 0.0);
        assert_eq!(c.witness.sum(), 0.0);
    }

    #[test]
    fn witness_is_an_eigenvector() {
        let c = bias_counterexample(6).unwrap();
        let s = laplacian_spectrum(&c.graph).unwrap();
        let ut = s.eigenvectors.transpose() * &c.witness;
        let lam = s.eigenvalues.iter().zip(ut.iter()).map(|(l, w)| l * w * w).sum::<f64>();
        let resid = (s.reconstruct() * &c.witness - lam * &c.witness).norm();
        assert!(resid <= 1e-12);
    }

    #[test]
    fn witness_survives_scaling_and_random_draws() {
        let mut c = bias_counterexample(7).unwrap();
        let r = witness_check(&c, 100, 3, 9);
        assert!(r.passed(), "{r:?}");
        c.x *= -3.7;
        assert!(witness_check(&c, 100, 3, 10).passed());
    }

    #[test]
    fn distinct_isolated_features_break_witness() {
        let mut c = bias_counterexample(5).unwrap();
        c.x[(0, 0)] = 1.5;
        assert!((c.witness.transpose() * &c.x)[0].abs() > 0.1);
        assert!(!witness_check(&c, 10, 1, 0).passed());
    }

    #[test]
    fn small_n_rejected() {
        assert!(bias_counterexample(3).is_err());
    }
}
