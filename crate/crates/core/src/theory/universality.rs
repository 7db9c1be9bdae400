//! Constructive universality: find `W*` and a polynomial `g` with
//! `g(L̂) X W* = z`, with or without random feature augmentation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::NewtonInterpolant;
use crate::rng::{derive_seed, gaussian_matrix, gaussian_vector, rng};
use crate::spectral::{cluster_eigenvalues, Spectrum, DEFAULT_TOL_EIG, DEFAULT_TOL_MISSING};

const MAX_ATTEMPTS: u64 = 100;
/// Smallest admissible `|(X̃ W*)_i|`.
const MIN_PROJECTION: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniversalitySolution {
    pub w_star: Vec<f64>,
    /// The filter `g(λ)`, interpolating the required gain at each eigenvalue.
    pub filter: NewtonInterpolant,
    /// `‖g(L̂) X W* − z‖ / ‖z‖` (absolute when `z = 0`).
    pub relative_residual: f64,
    /// Seed offset of the accepted `W*` draw.
    pub attempts: u64,
}

impl UniversalitySolution {
    /// Coefficients of `g` over powers of `λ`.
    pub fn poly_coeffs(&self) -> Vec<f64> {
        self.filter.monomial_coeffs()
    }
}

fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

/// `U g(Λ) Uᵀ x` with `g` the interpolant.
fn filtered(s: &Spectrum, g: &NewtonInterpolant, x: &DVector<f64>) -> Result<DVector<f64>> {
    s.apply_exact_filter(|l| g.eval(l), x)
}

pub fn universality_solve(s: &Spectrum, x: &DMatrix<f64>, z: &DVector<f64>, seed: u64) -> Result<UniversalitySolution> {
    let n = s.n();
    if z.len() != n {
        return Err(Error::Dimension { context: "universality target", expected: n, got: z.len() });
    }
    let groups = cluster_eigenvalues(&s.eigenvalues, DEFAULT_TOL_EIG);
    if let Some(&(a, b)) = groups.iter().find(|(a, b)| b - a > 1) {
        return Err(Error::Precondition(format!(
            "multiple eigenvalue: λ = {:.6} has multiplicity {}",
            s.eigenvalues[a],
            b - a
        )));
    }
    let xt = s.gft(x)?;
    if let Some(i) = (0..n).find(|&i| xt.row(i).norm() <= DEFAULT_TOL_MISSING) {
        return Err(Error::Precondition(format!(
            "missing frequency component at λ = {:.6}",
            s.eigenvalues[i]
        )));
    }
    let zt = s.gft_vector(z)?;

    for attempt in 0..MAX_ATTEMPTS {
        let w = gaussian_vector(&mut rng(derive_seed(seed, &[attempt])), x.ncols(), 1.0);
        let proj = &xt * &w;
        if proj.iter().any(|v| v.abs() <= MIN_PROJECTION) {
            continue;
        }
        let gains: Vec<f64> = (0..n).map(|i| zt[i] / proj[i]).collect();
        let filter = NewtonInterpolant::fit(&s.eigenvalues, &gains)?;
        let out = filtered(s, &filter, &(x * &w))?;
        let relative_residual = relative((out - z).norm(), z.norm());
        return Ok(UniversalitySolution { w_star: w.as_slice().to_vec(), filter, relative_residual, attempts: attempt });
    }
    Err(Error::Numeric(format!(
        "no admissible W* after {MAX_ATTEMPTS} draws"
    )))
}

#[derive(Debug, Clone, Serialize)]
pub struct RandomFeatureSolution {
    /// Random columns appended to `X`, one per eigenvalue lying in a
    /// multiple-eigenvalue cluster.
    pub random_columns: usize,
    /// Weights over `[X | R]`; the original columns get zero weight when
    /// random columns are present.
    pub w_star: Vec<f64>,
    pub filter: NewtonInterpolant,
    pub relative_residual: f64,
    /// Feature seed actually used after resampling singular draws.
    pub seed_used: u64,
    /// `[X | R]`.
    #[serde(skip)]
    pub features: DMatrix<f64>,
}

/// Universality with Gaussian random features resolving multiplicities:
/// on the eigenvalues of multiple-eigenvalue clusters the filter is 1 and
/// `W` inverts the random block of `X̃`; elsewhere the filter supplies the
/// pointwise gain.
pub fn random_feature_universality(
    s: &Spectrum,
    x: &DMatrix<f64>,
    z: &DVector<f64>,
    seed: u64,
) -> Result<RandomFeatureSolution> {
    let n = s.n();
    if z.len() != n || x.nrows() != n {
        return Err(Error::Dimension { context: "random-feature universality input", expected: n, got: z.len().min(x.nrows()) });
    }
    let zt = s.gft_vector(z)?;
    let tol = DEFAULT_TOL_MISSING * z.norm().max(1.0);
    if let Some(i) = (0..n).find(|&i| zt[i].abs() <= tol) {
        return Err(Error::Precondition(format!(
            "target is missing the frequency component at λ = {:.6}",
            s.eigenvalues[i]
        )));
    }
    let groups = cluster_eigenvalues(&s.eigenvalues, DEFAULT_TOL_EIG);
    let multi: Vec<usize> = groups.iter().filter(|(a, b)| b - a > 1).flat_map(|&(a, b)| a..b).collect();
    if multi.is_empty() {
        let sol = universality_solve(s, x, z, seed)?;
        return Ok(RandomFeatureSolution {
            random_columns: 0,
            w_star: sol.w_star,
            filter: sol.filter,
            relative_residual: sol.relative_residual,
            seed_used: seed,
            features: x.clone(),
        });
    }
    let m = multi.len();
    let d0 = x.ncols();

    for attempt in 0..MAX_ATTEMPTS {
        let seed_used = seed.wrapping_add(attempt);
        let r = gaussian_matrix(&mut rng(seed_used), n, m, 1.0);
        let rt = s.gft(&r)?;
        let block = DMatrix::from_fn(m, m, |i, j| rt[(multi[i], j)]);
        let rhs = DVector::from_fn(m, |i, _| zt[multi[i]]);
        let Some(w) = block.clone().lu().solve(&rhs) else { continue };
        if !w.iter().all(|v| v.is_finite()) || (&block * &w - &rhs).amax() > 1e-9 * rhs.amax().max(1.0) {
            continue;
        }
        let proj = &rt * &w;

        // One node per distinct eigenvalue: gain 1 on clusters, pointwise elsewhere.
        let mut nodes = Vec::with_capacity(groups.len());
        let mut gains = Vec::with_capacity(groups.len());
        let mut ok = true;
        for &(a, b) in &groups {
            let lam = s.eigenvalues[a..b].iter().sum::<f64>() / (b - a) as f64;
            nodes.push(lam);
            if b - a > 1 {
                gains.push(1.0);
            } else if proj[a].abs() <= MIN_PROJECTION {
                ok = false;
                break;
            } else {
                gains.push(zt[a] / proj[a]);
            }
        }
        if !ok {
            continue;
        }
        let filter = NewtonInterpolant::fit(&nodes, &gains)?;
        let mut features = DMatrix::zeros(n, d0 + m);
        features.view_mut((0, 0), (n, d0)).copy_from(x);
        features.view_mut((0, d0), (n, m)).copy_from(&r);
        let mut w_full = vec![0.0; d0];
        w_full.extend(w.iter());
        let out = filtered(s, &filter, &(&features * DVector::from_vec(w_full.clone())))?;
        let relative_residual = relative((out - z).norm(), z.norm());
        return Ok(RandomFeatureSolution { random_columns: m, w_star: w_full, filter, relative_residual, seed_used, features });
    }
    Err(Error::Numeric(format!("random feature block stayed singular for {MAX_ATTEMPTS} draws")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete_graph, erdos_renyi, path_graph};
    use crate::spectral::laplacian_spectrum;

    #[test]
    fn path_of_two_high_pass_target() {
        let s = laplacian_spectrum(&path_graph(2)).unwrap();
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let z = DVector::from_vec(vec![0.0, 1.0]);
        let sol = universality_solve(&s, &x, &z, 0).unwrap();
        assert!(sol.relative_residual <= 1e-12);
        let w = sol.w_star[0];
        for l in [0.0, 2.0] {
            assert_close!(sol.filter.eval(l) * w, 1.0 - l, 1e-12);
        }
    }

    #[test]
    fn identity_target() {
        let s = (0..)
            .map(|seed| laplacian_spectrum(&erdos_renyi(12, 0.4, seed).unwrap()).unwrap())
            .find(|s| cluster_eigenvalues(&s.eigenvalues, DEFAULT_TOL_EIG).len() == 12)
            .unwrap();
        let x = gaussian_matrix(&mut rng(1), 12, 2, 1.0);
        let z = x.column(0).into_owned();
        let sol = universality_solve(&s, &x, &z, 5).unwrap();
        assert!(sol.relative_residual <= 1e-6);
    }

    #[test]
    fn random_graph_arbitrary_target() {
        let mut found = 0;
        for seed in 0..10 {
            let g = erdos_renyi(20, 0.3, seed).unwrap();
            let s = laplacian_spectrum(&g).unwrap();
            if !g.is_connected() || cluster_eigenvalues(&s.eigenvalues, DEFAULT_TOL_EIG).len() < 20 {
                continue;
            }
            found += 1;
            let x = gaussian_matrix(&mut rng(seed + 100), 20, 3, 1.0);
            let z = gaussian_vector(&mut rng(seed + 200), 20, 1.0);
            let sol = universality_solve(&s, &x, &z, seed).unwrap();
            assert!(sol.relative_residual <= 1e-6, "seed {seed}: {}", sol.relative_residual);
        }
        assert!(found >= 3);
    }

    #[test]
    fn preconditions_are_named() {
        let s = laplacian_spectrum(&complete_graph(3)).unwrap();
        let x = gaussian_matrix(&mut rng(1), 3, 1, 1.0);
        let err = universality_solve(&s, &x, &DVector::zeros(3), 0).unwrap_err().to_string();
        assert!(err.contains("multiple eigenvalue"), "{err}");

        let s = laplacian_spectrum(&path_graph(2)).unwrap();
        let x = DMatrix::from_element(2, 1, 1.0);
        let err = universality_solve(&s, &x, &DVector::zeros(2), 0).unwrap_err().to_string();
        assert!(err.contains("missing frequency"), "{err}");
    }

    #[test]
    fn random_features_resolve_triangle() {
        let s = laplacian_spectrum(&complete_graph(3)).unwrap();
        let x = DMatrix::from_element(3, 1, 1.0);
        let z = DVector::from_vec(vec![0.3, -1.1, 2.0]);
        for seed in 0..20 {
            let sol = random_feature_universality(&s, &x, &z, seed).unwrap();
            assert_eq!(sol.random_columns, 2);
            assert!(sol.relative_residual <= 1e-6);
        }
    }

    #[test]
    fn random_features_not_needed_for_distinct_spectrum() {
        let s = laplacian_spectrum(&path_graph(4)).unwrap();
        let x = gaussian_matrix(&mut rng(3), 4, 1, 1.0);
        let z = DVector::from_vec(vec![1.0, 2.0, -0.5, 0.25]);
        let sol = random_feature_universality(&s, &x, &z, 1).unwrap();
        assert_eq!(sol.random_columns, 0);
        assert!(sol.relative_residual <= 1e-10);
    }
}
