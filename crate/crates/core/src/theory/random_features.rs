//! Gaussian random features in the spectral domain, and how much filter
//! degree they demand.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{gaussian_vector, rng};
use crate::spectral::{cluster_eigenvalues, orthonormal_vectors, Spectrum, DEFAULT_TOL_EIG};

pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStatsReport {
    pub n: usize,
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
    /// Largest `|mean_i|` of the transformed samples.
    pub max_abs_mean: f64,
    /// `5σ/√samples`.
    pub mean_bound: f64,
    /// Largest `|C_ij − σ²δ_ij|` of the second-moment matrix.
    pub max_cov_deviation: f64,
    /// `5σ²/√samples`.
    pub cov_bound: f64,
    /// Largest `|‖x̃‖ − ‖x‖|` over samples.
    pub max_norm_change: f64,
}

impl SpectrumStatsReport {
    pub fn passed(&self) -> bool {
        self.max_abs_mean <= self.mean_bound
            && self.max_cov_deviation <= self.cov_bound
            && self.max_norm_change <= 1e-10 * (1.0 + self.sigma * (self.n as f64).sqrt())
    }
}

/// Monte Carlo check that `Uᵀx ~ N(0, σ²I)` when `x ~ N(0, σ²I)`.
pub fn random_feature_spectrum_test(s: &Spectrum, sigma: f64, samples: usize, seed: u64) -> Result<SpectrumStatsReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    let n = s.n();
    let mut r = rng(seed);
    let mut mean = DVector::<f64>::zeros(n);
    let mut second = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut max_norm_change: f64 = 0.0;
    for _ in 0..samples {
        let x = gaussian_vector(&mut r, n, sigma);
        let xt = s.gft_vector(&x)?;
        max_norm_change = max_norm_change.max((xt.norm() - x.norm()).abs());
        mean += &xt;
        second.ger(1.0, &xt, &xt, 1.0);
    }
    let count = samples as f64;
    mean /= count;
    second /= count;
    for i in 0..n {
        second[(i, i)] -= sigma * sigma;
    }
    let root = count.sqrt();
    Ok(SpectrumStatsReport {
        n,
        sigma,
        samples,
        seed,
        max_abs_mean: mean.amax(),
        mean_bound: 5.0 * sigma / root,
        max_cov_deviation: second.amax(),
        cov_bound: 5.0 * sigma * sigma / root,
        max_norm_change,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDemandReport {
    pub n: usize,
    pub distinct_eigenvalues: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Relative residual of the best filter of each degree `0..`.
    pub residuals: Vec<f64>,
    /// Smallest degree reaching `tolerance`.
    pub min_degree: Option<usize>,
    /// `threshold_fraction · distinct_eigenvalues`.
    pub threshold: f64,
}

impl DegreeDemandReport {
    /// The demanded degree is at least the threshold (never reaching the
    /// tolerance counts).
    pub fn demands_high_degree(&self) -> bool {
        self.min_degree.is_none_or(|d| d as f64 >= self.threshold)
    }
}

/// The target `z̃_i = 1 + λ_i` is affine in frequency, but fed a Gaussian
/// feature `x` the model must realize the gain `g(λ_i) = z̃_i / x̃_i`.
/// Fits `g` of growing degree by weighted least squares and records the
/// relative residual `‖g(Λ)x̃ − z̃‖ / ‖z̃‖` at each degree.
pub fn random_feature_degree_demand(
    s: &Spectrum,
    seed: u64,
    tolerance: f64,
    threshold_fraction: f64,
) -> Result<DegreeDemandReport> {
    let n = s.n();
    let groups = cluster_eigenvalues(&s.eigenvalues, DEFAULT_TOL_EIG);
    if groups.len() < n {
        return Err(Error::Precondition("multiple eigenvalue: degree demand needs a distinct spectrum".into()));
    }
    let x = gaussian_vector(&mut rng(seed), n, 1.0);
    let xt = s.gft_vector(&x)?;
    let zt: Vec<f64> = s.eigenvalues.iter().map(|l| 1.0 + l).collect();
    let z_norm = zt.iter().map(|v| v * v).sum::<f64>().sqrt();
    let weights: Vec<f64> = xt.iter().map(|v| v * v).collect();

    // Σ_i x̃_i² (g(λ_i) − z̃_i/x̃_i)² = ‖Q c − t‖² with t_i = sign(x̃_i) z̃_i and
    // Q the orthonormal vectors of the measure, so each degree adds one
    // projection.
    let (_, q) = orthonormal_vectors(&s.eigenvalues, &weights, n - 1)?;
    let mut resid: Vec<f64> = (0..n).map(|i| zt[i].copysign(xt[i])).collect();
    let mut residuals = Vec::with_capacity(n);
    for qk in &q {
        let c: f64 = qk.iter().zip(&resid).map(|(a, b)| a * b).sum();
        resid.iter_mut().zip(qk).for_each(|(r, v)| *r -= c * v);
        residuals.push(resid.iter().map(|v| v * v).sum::<f64>().sqrt() / z_norm);
    }
    let min_degree = residuals.iter().position(|&r| r <= tolerance);
    Ok(DegreeDemandReport {
        n,
        distinct_eigenvalues: groups.len(),
        seed,
        tolerance,
        residuals,
        min_degree,
        threshold: threshold_fraction * groups.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{grid_graph, path_graph};
    use crate::spectral::laplacian_spectrum;

    #[test]
    fn zero_sigma_gives_zero_transform() {
        let s = laplacian_spectrum(&path_graph(5)).unwrap();
        let r = random_feature_spectrum_test(&s, 0.0, 1000, 1).unwrap();
        assert_eq!(r.max_abs_mean, 0.0);
        assert_eq!(r.max_cov_deviation, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn grid_covariance_is_identity() {
        let s = laplacian_spectrum(&grid_graph(2, 5).unwrap()).unwrap();
        let r = random_feature_spectrum_test(&s, 1.0, 10_000, 3).unwrap();
        assert!(r.max_cov_deviation <= 0.05, "{r:?}");
        assert!(r.max_norm_change <= 1e-12);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn too_few_samples_rejected() {
        let s = laplacian_spectrum(&path_graph(3)).unwrap();
        assert!(random_feature_spectrum_test(&s, 1.0, 999, 0).is_err());
    }

    #[test]
    fn residuals_decrease_with_degree() {
        let s = laplacian_spectrum(&path_graph(20)).unwrap();
        let r = random_feature_degree_demand(&s, 4, 1e-3, 0.25).unwrap();
        assert!(r.residuals.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(r.residuals[0] <= 1.0 + 1e-9);
    }
}
