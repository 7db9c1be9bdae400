//! Spectral view of a graph signal: eigendecomposition of `L̂`, graph
//! Fourier transform, frequency diagnostics, signal density and the
//! Hessian of the linear model's squared loss in coefficient space.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bases::{basis_values, BasisSpec, OrthoRecurrence};
use crate::error::{Error, Result};
use crate::graph::{normalized_laplacian, Graph, SymmetricOperator};
use crate::linalg;

/// Default tolerance for a frequency component to count as missing.
pub const DEFAULT_TOL_MISSING: f64 = 1e-8;
/// Default gap below which neighbouring eigenvalues are treated as equal.
pub const DEFAULT_TOL_EIG: f64 = 1e-8;
/// Default number of density bins on `[0, 2]`.
pub const DEFAULT_DENSITY_BINS: usize = 40;

/// `L̂ = U diag(Λ) Uᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

pub fn eigendecompose(op: &SymmetricOperator) -> Result<Spectrum> {
    if !op.is_symmetric() {
        return Err(Error::Precondition("operator is not symmetric".into()));
    }
    Spectrum::from_dense(&op.to_dense())
}

/// Spectrum of the normalized Laplacian of `g`.
pub fn laplacian_spectrum(g: &Graph) -> Result<Spectrum> {
    eigendecompose(&normalized_laplacian(g))
}

impl Spectrum {
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Spectrum> {
        let (eigenvalues, eigenvectors) = linalg::symmetric_eigen(m)?;
        Ok(Spectrum { eigenvalues, eigenvectors })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    fn check_rows(&self, rows: usize, context: &'static str) -> Result<()> {
        if rows != self.n() {
            return Err(Error::Dimension { context, expected: self.n(), got: rows });
        }
        Ok(())
    }

    /// `X̃ = Uᵀ X`.
    pub fn gft(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(x.nrows(), "graph Fourier transform input")?;
        Ok(self.eigenvectors.tr_mul(x))
    }

    /// `X = U X̃`.
    pub fn igft(&self, xt: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(xt.nrows(), "inverse graph Fourier transform input")?;
        Ok(&self.eigenvectors * xt)
    }

    pub fn gft_vector(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(x.len(), "graph Fourier transform input")?;
        Ok(self.eigenvectors.tr_mul(x))
    }

    /// `U h(Λ) Uᵀ x`.
    pub fn apply_exact_filter(&self, h: impl Fn(f64) -> f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut xt = self.gft_vector(x)?;
        for (v, &l) in xt.iter_mut().zip(&self.eigenvalues) {
            *v *= h(l);
        }
        Ok(&self.eigenvectors * xt)
    }

    /// Column-wise [`Spectrum::apply_exact_filter`].
    pub fn apply_exact_filter_matrix(
        &self,
        h: impl Fn(f64) -> f64,
        x: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        let mut xt = self.gft(x)?;
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            let hl = h(l);
            xt.row_mut(i).scale_mut(hl);
        }
        Ok(&self.eigenvectors * xt)
    }

    /// `U diag(Λ) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.n(), self.n(), |i, j| {
            self.eigenvectors[(i, j)] * self.eigenvalues[j]
        });
        scaled * self.eigenvectors.transpose()
    }
}

/// Per-frequency energy `Σ_c X̃_{ic}²`.
pub fn squared_components(s: &Spectrum, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let xt = s.gft(x)?;
    Ok(xt.row_iter().map(|r| r.norm_squared()).collect())
}

/// Half-open index ranges of eigenvalue clusters; a new cluster starts when
/// the gap to the previous (sorted) eigenvalue exceeds `tol`.
pub fn cluster_eigenvalues(eigenvalues: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=eigenvalues.len() {
        if i == eigenvalues.len() || eigenvalues[i] - eigenvalues[i - 1] > tol {
            groups.push((start, i));
            start = i;
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub distinct_eigenvalues: usize,
    /// Frequency components with `‖X̃_λ‖ ≤ tol_missing`; absent without features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_missing: Option<usize>,
    /// Percent of distinct eigenvalues with multiplicity above one.
    pub multi_ratio: f64,
    /// Half-open index ranges into the ascending eigenvalues.
    pub groups: Vec<(usize, usize)>,
    pub tol_missing: f64,
    pub tol_eig: f64,
}

impl Diagnostics {
    pub fn multiplicities(&self) -> impl Iterator<Item = usize> + '_ {
        self.groups.iter().map(|(a, b)| b - a)
    }

    pub fn has_multiple_eigenvalues(&self) -> bool {
        self.multiplicities().any(|m| m > 1)
    }
}

pub fn diagnose(
    s: &Spectrum,
    x: Option<&DMatrix<f64>>,
    tol_missing: f64,
    tol_eig: f64,
) -> Result<Diagnostics> {
    if !(tol_missing > 0.0 && tol_eig > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerances must be positive, got {tol_missing} and {tol_eig}"
        )));
    }
    let groups = cluster_eigenvalues(&s.eigenvalues, tol_eig);
    let multi = groups.iter().filter(|(a, b)| b - a > 1).count();
    let multi_ratio = if groups.is_empty() {
        0.0
    } else {
        100.0 * multi as f64 / groups.len() as f64
    };
    let n_missing = match x {
        Some(x) => {
            let energy = squared_components(s, x)?;
            Some(energy.iter().filter(|e| e.sqrt() <= tol_missing).count())
        }
        None => None,
    };
    Ok(Diagnostics {
        n: s.n(),
        distinct_eigenvalues: groups.len(),
        n_missing,
        multi_ratio,
        groups,
        tol_missing,
        tol_eig,
    })
}

/// Histogram of signal energy over frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    /// `bins + 1` uniform edges from 0 to 2.
    pub bin_edges: Vec<f64>,
    /// Energy at frequencies below each edge; the last entry is the total.
    pub cumulative: Vec<f64>,
    /// Energy per unit frequency in each bin.
    pub density: Vec<f64>,
}

impl DensityEstimate {
    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda_lo", "lambda_hi", "F", "f"])?;
        for j in 0..self.bins() {
            w.write_record([
                self.bin_edges[j].to_string(),
                self.bin_edges[j + 1].to_string(),
                self.cumulative[j + 1].to_string(),
                self.density[j].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Bin the energy `X̃²` by eigenvalue. Eigenvalues that round slightly
/// outside `[0, 2]` fall into the first or last bin.
pub fn signal_density(s: &Spectrum, x: &DMatrix<f64>, bins: usize) -> Result<DensityEstimate> {
    if bins == 0 {
        return Err(Error::InvalidParameter("density needs at least one bin".into()));
    }
    let energy = squared_components(s, x)?;
    let width = 2.0 / bins as f64;
    let mut mass = vec![0.0; bins];
    for (&l, &e) in s.eigenvalues.iter().zip(&energy) {
        let j = ((l / width).floor().max(0.0) as usize).min(bins - 1);
        mass[j] += e;
    }
    let bin_edges = (0..=bins).map(|j| j as f64 * width).collect();
    let mut cumulative = Vec::with_capacity(bins + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for m in &mass {
        acc += m;
        cumulative.push(acc);
    }
    let density = mass.iter().map(|m| m / width).collect();
    Ok(DensityEstimate { bin_edges, cumulative, density })
}

fn check_weights(eigenvalues: &[f64], weights: &[f64]) -> Result<()> {
    if weights.len() != eigenvalues.len() {
        return Err(Error::Dimension {
            context: "spectral weights",
            expected: eigenvalues.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spectral weights must be finite and non-negative, found {w}"
        )));
    }
    Ok(())
}

/// `H[k1][k2] = Σ_i w_i g_k1(λ_i) g_k2(λ_i)`, the Hessian of the squared
/// loss of a single-channel linear model in its basis coefficients.
pub fn hessian(eigenvalues: &[f64], weights: &[f64], spec: &BasisSpec) -> Result<DMatrix<f64>> {
    check_weights(eigenvalues, weights)?;
    let m = spec.num_terms();
    let mut h = DMatrix::zeros(m, m);
    for (&l, &w) in eigenvalues.iter().zip(weights) {
        let g = basis_values(spec, l);
        for a in 0..m {
            for b in 0..m {
                h[(a, b)] += w * (g[a] * g[b]);
            }
        }
    }
    Ok(h)
}

/// Recurrence for the polynomials in `z = 1 - λ` that are orthonormal
/// under the discrete measure `Σ_i w_i δ(λ - λ_i)`.
///
/// Runs the Stieltjes procedure as a Lanczos iteration on `diag(z)` with
/// full reorthogonalization.
pub fn fit_orthonormal_basis(
    eigenvalues: &[f64],
    weights: &[f64],
    degree: usize,
) -> Result<OrthoRecurrence> {
    Ok(orthonormal_vectors(eigenvalues, weights, degree)?.0)
}

/// The recurrence together with the vectors `q_k[i] = √w_i p_k(λ_i)`,
/// which are orthonormal to working precision.
pub(crate) fn orthonormal_vectors(
    eigenvalues: &[f64],
    weights: &[f64],
    degree: usize,
) -> Result<(OrthoRecurrence, Vec<Vec<f64>>)> {
    check_weights(eigenvalues, weights)?;
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Precondition("spectral weights carry no mass".into()));
    }

    let mut support: Vec<f64> = eigenvalues
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 1e-12 * total)
        .map(|(&l, _)| l)
        .collect();
    support.sort_by(f64::total_cmp);
    let distinct = cluster_eigenvalues(&support, DEFAULT_TOL_EIG).len();
    if distinct < degree + 1 {
        return Err(Error::InsufficientSupport {
            requested: degree,
            needed: degree + 1,
            max_feasible: distinct - 1,
        });
    }

    let n = eigenvalues.len();
    let z: Vec<f64> = eigenvalues.iter().map(|l| 1.0 - l).collect();
    let p0 = 1.0 / total.sqrt();
    let mut q: Vec<Vec<f64>> = vec![weights.iter().map(|w| w.sqrt() * p0).collect()];
    let mut alpha = Vec::with_capacity(degree);
    let mut beta = vec![0.0];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    for k in 0..degree {
        let mut r: Vec<f64> = (0..n).map(|i| z[i] * q[k][i]).collect();
        let a = dot(&q[k], &r);
        for i in 0..n {
            r[i] -= a * q[k][i];
            if k > 0 {
                r[i] -= beta[k] * q[k - 1][i];
            }
        }
        for _ in 0..2 {
            for qj in &q {
                let c = dot(qj, &r);
                r.iter_mut().zip(qj).for_each(|(ri, qi)| *ri -= c * qi);
            }
        }
        let b = dot(&r, &r).sqrt();
        if !(b > 0.0) {
            return Err(Error::Numeric(format!(
                "orthonormal recurrence broke down at degree {}",
                k + 1
            )));
        }
        alpha.push(a);
        beta.push(b);
        q.push(r.into_iter().map(|v| v / b).collect());
    }
    Ok((OrthoRecurrence { p0, alpha, beta }, q))
}
