//! Error of polynomial interpolation at Chebyshev points against the
//! classical derivative bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::poly::{chebyshev_points, NewtonInterpolant};

pub const ERROR_GRID_POINTS: usize = 2001;
/// Grid on which derivative suprema are estimated for non-analytic sups.
pub const DERIVATIVE_GRID_POINTS: usize = 4001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub filter: String,
    pub degree: usize,
    pub sup_error: f64,
    /// `sup|h^{(n+1)}| / ((n+1)! 2ⁿ)`; `None` when `h` is not smooth enough
    /// for the bound to apply.
    pub bound: Option<f64>,
    pub derivative_sup: Option<f64>,
}

impl InterpolationReport {
    /// Holds trivially when no bound applies.
    pub fn within_bound(&self) -> bool {
        self.bound.is_none_or(|b| self.sup_error <= b)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `sup|h^{(n+1)}| / ((n+1)! 2ⁿ)`.
pub fn chebyshev_error_bound(degree: usize, derivative_sup: f64) -> f64 {
    derivative_sup / (factorial(degree + 1) * 2f64.powi(degree as i32))
}

/// Interpolate `h` at the `degree + 1` Chebyshev points of `[0, 2]` and
/// measure the sup error on a uniform grid.
pub fn interpolation_sup_error(h: impl Fn(f64) -> f64, degree: usize) -> Result<f64> {
    let nodes = chebyshev_points(degree);
    let values: Vec<f64> = nodes.iter().map(|&t| h(t)).collect();
    let p = NewtonInterpolant::fit(&nodes, &values)?;
    let m = ERROR_GRID_POINTS - 1;
    Ok((0..=m)
        .map(|i| 2.0 * i as f64 / m as f64)
        .map(|t| (p.eval(t) - h(t)).abs())
        .fold(0.0, f64::max))
}

pub fn interpolation_bound_check(filter: FilterKind, degree: usize) -> Result<InterpolationReport> {
    if degree > 40 {
        return Err(Error::InvalidParameter(format!("interpolation degree {degree} exceeds 40")));
    }
    let sup_error = interpolation_sup_error(|l| filter.eval(l), degree)?;
    let derivative_sup = filter.is_smooth().then(|| filter.derivative_sup(degree + 1, DERIVATIVE_GRID_POINTS));
    Ok(InterpolationReport {
        filter: filter.name().to_string(),
        degree,
        sup_error,
        bound: derivative_sup.map(|d| chebyshev_error_bound(degree, d)),
        derivative_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_reproduced() {
        let e = interpolation_sup_error(|t| 1.0 - 2.0 * t + 0.25 * t.powi(4), 4).unwrap();
        assert!(e <= 1e-10, "{e}");
    }

    #[test]
    fn cosine_bounds() {
        assert_close!(chebyshev_error_bound(4, 1.0), 1.0 / 1920.0, 1e-18);
        assert_close!(chebyshev_error_bound(8, 1.0), 1.0 / (362880.0 * 256.0), 1e-20);
        for n in [4, 6, 8] {
            let r = interpolation_bound_check(FilterKind::Cos, n).unwrap();
            assert!(r.within_bound(), "{r:?}");
            assert!(r.sup_error > 0.0);
        }
    }

    #[test]
    fn comb_has_no_bound() {
        let r = interpolation_bound_check(FilterKind::Comb, 6).unwrap();
        assert!(r.bound.is_none());
        assert!(r.within_bound());
    }

    #[test]
    fn smooth_benchmark_filters_respect_bound() {
        for f in [FilterKind::Low, FilterKind::Band, FilterKind::High, FilterKind::Reject] {
            for n in [4, 8, 12] {
                let r = interpolation_bound_check(f, n).unwrap();
                assert!(r.within_bound(), "{r:?}");
            }
        }
    }
}
