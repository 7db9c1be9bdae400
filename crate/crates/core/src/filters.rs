//! Scalar filter responses `h(λ)` on the Laplacian spectrum `[0, 2]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// `e^{-10 λ²}`
    Low,
    /// `1 - e^{-10 λ²}`
    High,
    /// `e^{-10 (λ-1)²}`
    Band,
    /// `1 - e^{-10 (λ-1)²}`
    Reject,
    /// `|sin πλ|`
    Comb,
    /// `cos λ`; every derivative is bounded by 1.
    Cos,
}

impl FilterKind {
    /// The five responses of the synthetic filter-learning benchmark.
    pub const BENCHMARK: [FilterKind; 5] = [
        FilterKind::Low,
        FilterKind::High,
        FilterKind::Band,
        FilterKind::Reject,
        FilterKind::Comb,
    ];

    pub fn eval(self, lambda: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            FilterKind::Low => (-10.0 * lambda * lambda).exp(),
            FilterKind::High => 1.0 - (-10.0 * lambda * lambda).exp(),
            FilterKind::Band => (-10.0 * (lambda - 1.0).powi(2)).exp(),
            FilterKind::Reject => 1.0 - (-10.0 * (lambda - 1.0).powi(2)).exp(),
            FilterKind::Comb => (PI * lambda).sin().abs(),
            FilterKind::Cos => lambda.cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Low => "low",
            FilterKind::High => "high",
            FilterKind::Band => "band",
            FilterKind::Reject => "reject",
            FilterKind::Comb => "comb",
            FilterKind::Cos => "cos",
        }
    }

    /// Whether `h` is infinitely differentiable on `[0, 2]`. The comb has
    /// kinks at λ = 1 (and touches zero at the endpoints).
    pub fn is_smooth(self) -> bool {
        !matches!(self, FilterKind::Comb)
    }

    /// `sup_{λ∈[0,2]} |h^{(order)}(λ)|`. Exact for `cos`; for the others the
    /// derivative is computed exactly by Taylor-mode differentiation at each
    /// point of a uniform grid and the supremum is taken over the grid.
    pub fn derivative_sup(self, order: usize, grid_points: usize) -> f64 {
        if self == FilterKind::Cos {
            return 1.0;
        }
        let pts = grid_points.max(2);
        (0..pts)
            .map(|i| 2.0 * i as f64 / (pts - 1) as f64)
            .filter(|&l| self.is_smooth() || (l - l.round()).abs() > 1e-12)
            .map(|l| self.derivative(order, l).abs())
            .fold(0.0, f64::max)
    }

    /// `h^{(order)}(λ)` via Taylor coefficients.
    pub fn derivative(self, order: usize, lambda: f64) -> f64 {
        let jet = self.jet(lambda, order);
        jet.derivative(order)
    }

    fn jet(self, lambda: f64, order: usize) -> Jet {
        use std::f64::consts::PI;
        let x = Jet::variable(lambda, order);
        let gauss = |shift: f64| {
            let u = x.clone().add_const(-shift);
            u.mul(&u).scale(-10.0).exp()
        };
        match self {
            FilterKind::Low => gauss(0.0),
            FilterKind::High => gauss(0.0).scale(-1.0).add_const(1.0),
            FilterKind::Band => gauss(1.0),
            FilterKind::Reject => gauss(1.0).scale(-1.0).add_const(1.0),
            FilterKind::Comb => {
                let (s, _) = x.scale(PI).sin_cos();
                if (PI * lambda).sin() < 0.0 {
                    s.scale(-1.0)
                } else {
                    s
                }
            }
            FilterKind::Cos => x.sin_cos().1,
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "low" => FilterKind::Low,
            "high" => FilterKind::High,
            "band" => FilterKind::Band,
            "reject" => FilterKind::Reject,
            "comb" => FilterKind::Comb,
            "cos" => FilterKind::Cos,
            other => {
                return Err(Error::InvalidParameter(format!("unknown filter {other:?}")));
            }
        })
    }
}

/// Truncated Taylor series `Σ c_k t^k` around a point.
#[derive(Debug, Clone)]
struct Jet(Vec<f64>);

impl Jet {
    fn variable(at: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = at;
        if order >= 1 {
            c[1] = 1.0;
        }
        Jet(c)
    }

    fn add_const(mut self, v: f64) -> Self {
        self.0[0] += v;
        self
    }

    fn scale(mut self, v: f64) -> Self {
        self.0.iter_mut().for_each(|c| *c *= v);
        self
    }

    fn mul(&self, other: &Jet) -> Jet {
        let m = self.0.len();
        Jet((0..m)
            .map(|k| (0..=k).map(|j| self.0[j] * other.0[k - j]).sum())
            .collect())
    }

    fn exp(&self) -> Jet {
        let u = &self.0;
        let mut y = vec![0.0; u.len()];
        y[0] = u[0].exp();
        for k in 1..u.len() {
            y[k] = (1..=k).map(|j| j as f64 * u[j] * y[k - j]).sum::<f64>() / k as f64;
        }
        Jet(y)
    }

    fn sin_cos(&self) -> (Jet, Jet) {
        let u = &self.0;
        let mut s = vec![0.0; u.len()];
        let mut c = vec![0.0; u.len()];
        s[0] = u[0].sin();
        c[0] = u[0].cos();
        for k in 1..u.len() {
            let kf = k as f64;
            s[k] = (1..=k).map(|j| j as f64 * u[j] * c[k - j]).sum::<f64>() / kf;
            c[k] = -(1..=k).map(|j| j as f64 * u[j] * s[k - j]).sum::<f64>() / kf;
        }
        (Jet(s), Jet(c))
    }

    fn derivative(&self, order: usize) -> f64 {
        let fact: f64 = (1..=order).map(|i| i as f64).product();
        self.0[order] * fact
    }
}
