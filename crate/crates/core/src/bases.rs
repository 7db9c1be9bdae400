//! Polynomial filter bases.
//!
//! Every learnable family except Bernstein is a polynomial in `z = 1 - λ`,
//! i.e. it is applied to a signal through the normalized adjacency `Â`.
//! Bernstein is defined directly in `λ`:
//!
//! | family      | `g_k(λ)`                                        |
//! |-------------|-------------------------------------------------|
//! | Monomial    | `(1-λ)^k`                                       |
//! | Chebyshev   | `T_k(1-λ) = cos(k arccos(1-λ))`                 |
//! | Jacobi      | `P_k^{a,b}(1-λ)`                                |
//! | Bernstein   | `C(K,k) (1-λ/2)^{K-k} (λ/2)^k`                  |
//! | OrthoFitted | orthonormal w.r.t. a discrete spectral measure  |
//!
//! The fixed APPNP and SGC filters use the Monomial basis with frozen
//! coefficients (see [`fixed_coeffs`]).

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::LinearOperator;

/// Default polynomial degree.
pub const DEFAULT_DEGREE: usize = 10;

const DENOM_EPS: f64 = 1e-12;

/// Three-term recurrence of a discrete orthonormal family in `z = 1 - λ`:
///
/// `p_0 = p0`, `beta[k+1] p_{k+1}(z) = (z - alpha[k]) p_k(z) - beta[k] p_{k-1}(z)`
/// with `beta[0]` unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoRecurrence {
    pub p0: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl OrthoRecurrence {
    pub fn degree(&self) -> usize {
        self.alpha.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BasisFamily {
    Monomial,
    Chebyshev,
    Bernstein,
    Jacobi { a: f64, b: f64 },
    FixedAppnp { alpha: f64 },
    FixedSgc,
    OrthoFitted(OrthoRecurrence),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    #[serde(flatten)]
    pub family: BasisFamily,
    pub degree: usize,
}

impl BasisSpec {
    pub fn monomial(degree: usize) -> Self {
        BasisSpec { family: BasisFamily::Monomial, degree }
    }

    pub fn chebyshev(degree: usize) -> Self {
        BasisSpec { family: BasisFamily::Chebyshev, degree }
    }

    pub fn bernstein(degree: usize) -> Self {
        BasisSpec { family: BasisFamily::Bernstein, degree }
    }

    pub fn fixed_sgc(degree: usize) -> Self {
        BasisSpec { family: BasisFamily::FixedSgc, degree }
    }

    pub fn jacobi(a: f64, b: f64, degree: usize) -> Result<Self> {
        let spec = BasisSpec { family: BasisFamily::Jacobi { a, b }, degree };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fixed_appnp(alpha: f64, degree: usize) -> Result<Self> {
        let spec = BasisSpec { family: BasisFamily::FixedAppnp { alpha }, degree };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ortho_fitted(rec: OrthoRecurrence) -> Self {
        let degree = rec.degree();
        BasisSpec { family: BasisFamily::OrthoFitted(rec), degree }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            BasisFamily::Jacobi { a, b } => {
                if !(*a > -1.0 && *b > -1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Jacobi exponents must exceed -1, got a={a}, b={b}"
                    )));
                }
                for k in 2..=self.degree {
                    jacobi_recurrence(*a, *b, k)?;
                }
            }
            BasisFamily::FixedAppnp { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "APPNP alpha must lie in (0,1), got {alpha}"
                    )));
                }
            }
            BasisFamily::OrthoFitted(rec) if rec.degree() != self.degree || rec.beta.len() != rec.alpha.len() + 1 => {
                return Err(Error::InvalidParameter(
                    "orthonormal recurrence table does not match the degree".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Coefficients are trained for every family except the fixed ones.
    pub fn is_learnable(&self) -> bool {
        !matches!(self.family, BasisFamily::FixedAppnp { .. } | BasisFamily::FixedSgc)
    }

    pub fn num_terms(&self) -> usize {
        self.degree + 1
    }

    /// Short label for reports, e.g. `jacobi(1,-0.5)`.
    pub fn label(&self) -> String {
        match &self.family {
            BasisFamily::Monomial => "monomial".into(),
            BasisFamily::Chebyshev => "chebyshev".into(),
            BasisFamily::Bernstein => "bernstein".into(),
            BasisFamily::Jacobi { a, b } => format!("jacobi({a},{b})"),
            BasisFamily::FixedAppnp { alpha } => format!("appnp({alpha})"),
            BasisFamily::FixedSgc => "sgc".into(),
            BasisFamily::OrthoFitted(_) => "ortho_fitted".into(),
        }
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[K={}]", self.label(), self.degree)
    }
}

/// Family names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Monomial,
    Chebyshev,
    Bernstein,
    Jacobi,
    Appnp,
    Sgc,
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "monomial" => FamilyName::Monomial,
            "chebyshev" => FamilyName::Chebyshev,
            "bernstein" => FamilyName::Bernstein,
            "jacobi" => FamilyName::Jacobi,
            "appnp" => FamilyName::Appnp,
            "sgc" => FamilyName::Sgc,
            other => return Err(Error::InvalidParameter(format!("unknown basis {other:?}"))),
        })
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyName::Monomial => "monomial",
            FamilyName::Chebyshev => "chebyshev",
            FamilyName::Bernstein => "bernstein",
            FamilyName::Jacobi => "jacobi",
            FamilyName::Appnp => "appnp",
            FamilyName::Sgc => "sgc",
        };
        f.write_str(s)
    }
}

impl FamilyName {
    /// Build a spec; `a`, `b` are used by Jacobi and `alpha` by APPNP.
    pub fn spec(self, degree: usize, a: f64, b: f64, alpha: f64) -> Result<BasisSpec> {
        match self {
            FamilyName::Monomial => Ok(BasisSpec::monomial(degree)),
            FamilyName::Chebyshev => Ok(BasisSpec::chebyshev(degree)),
            FamilyName::Bernstein => Ok(BasisSpec::bernstein(degree)),
            FamilyName::Jacobi => BasisSpec::jacobi(a, b, degree),
            FamilyName::Appnp => BasisSpec::fixed_appnp(alpha, degree),
            FamilyName::Sgc => Ok(BasisSpec::fixed_sgc(degree)),
        }
    }
}

// ---------------------------------------------------------------------------
// Jacobi recurrence

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceCoeffs {
    pub theta: f64,
    pub theta_prime: f64,
    pub theta_dprime: f64,
}

/// Coefficients of `P_k = (θ z + θ') P_{k-1} - θ'' P_{k-2}` for `k >= 2`.
pub fn jacobi_recurrence(a: f64, b: f64, k: usize) -> Result<RecurrenceCoeffs> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "Jacobi three-term recurrence starts at k = 2, got {k}"
        )));
    }
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Jacobi exponents must exceed -1, got a={a}, b={b}"
        )));
    }
    let kf = k as f64;
    let s = 2.0 * kf + a + b;
    let d1 = 2.0 * kf * (kf + a + b);
    let d2 = s - 2.0;
    if d1.abs() <= DENOM_EPS || d2.abs() <= DENOM_EPS {
        return Err(Error::InvalidParameter(format!(
            "Jacobi recurrence denominator vanishes at k={k} (a={a}, b={b})"
        )));
    }
    Ok(RecurrenceCoeffs {
        theta: s * (s - 1.0) / d1,
        theta_prime: (s - 1.0) * (a * a - b * b) / (d1 * d2),
        theta_dprime: (kf + a - 1.0) * (kf + b - 1.0) * s / (kf * (kf + a + b) * d2),
    })
}

/// `P_k^{a,b}(1) = C(k + a, k)`.
pub fn jacobi_at_one(a: f64, k: usize) -> f64 {
    let kf = k as f64;
    (ln_gamma(kf + a + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(a + 1.0)).exp()
}

/// Binomial coefficient through log-gamma, exact enough for `K <= 64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0))
        .exp()
        .round()
}

// ---------------------------------------------------------------------------
// Scalar evaluation

/// Values `g_0(λ), …, g_K(λ)`.
pub fn basis_values(spec: &BasisSpec, lambda: f64) -> Vec<f64> {
    let kmax = spec.degree;
    let z = 1.0 - lambda;
    let mut v = vec![0.0; kmax + 1];
    match &spec.family {
        BasisFamily::Monomial | BasisFamily::FixedAppnp { .. } | BasisFamily::FixedSgc => {
            v[0] = 1.0;
            for k in 1..=kmax {
                v[k] = v[k - 1] * z;
            }
        }
        BasisFamily::Chebyshev => {
            v[0] = 1.0;
            if kmax >= 1 {
                v[1] = z;
            }
            for k in 2..=kmax {
                v[k] = 2.0 * z * v[k - 1] - v[k - 2];
            }
        }
        BasisFamily::Jacobi { a, b } => {
            v[0] = 1.0;
            if kmax >= 1 {
                v[1] = (a - b) / 2.0 + (a + b + 2.0) / 2.0 * z;
            }
            for k in 2..=kmax {
                let c = jacobi_recurrence(*a, *b, k).expect("validated spec");
                v[k] = (c.theta * z + c.theta_prime) * v[k - 1] - c.theta_dprime * v[k - 2];
            }
        }
        BasisFamily::Bernstein => {
            let (lo, hi) = (1.0 - lambda / 2.0, lambda / 2.0);
            for (k, vk) in v.iter_mut().enumerate() {
                *vk = binomial(kmax, k) * lo.powi((kmax - k) as i32) * hi.powi(k as i32);
            }
        }
        BasisFamily::OrthoFitted(rec) => {
            v[0] = rec.p0;
            for k in 0..kmax {
                let prev = if k == 0 { 0.0 } else { rec.beta[k] * v[k - 1] };
                v[k + 1] = ((z - rec.alpha[k]) * v[k] - prev) / rec.beta[k + 1];
            }
        }
    }
    v
}

/// `g_k(λ)` for a single index.
pub fn basis_scalar(spec: &BasisSpec, k: usize, lambda: f64) -> Result<f64> {
    if k > spec.degree {
        return Err(Error::InvalidParameter(format!(
            "basis index {k} exceeds degree {} of {}",
            spec.degree,
            spec.label()
        )));
    }
    Ok(basis_values(spec, lambda)[k])
}

/// Frozen Monomial-basis coefficients of the fixed filters.
pub fn fixed_coeffs(spec: &BasisSpec) -> Result<Vec<f64>> {
    match spec.family {
        BasisFamily::FixedAppnp { alpha } => Ok((0..=spec.degree)
            .map(|k| alpha.powi(k as i32) / (1.0 - alpha))
            .collect()),
        BasisFamily::FixedSgc => {
            let mut c = vec![0.0; spec.degree + 1];
            c[spec.degree] = 1.0;
            Ok(c)
        }
        _ => Err(Error::Unsupported(format!(
            "{} has no fixed coefficients",
            spec.label()
        ))),
    }
}

/// Orthogonality weight of the family as a function of `λ`, where one
/// exists in closed form: `(1-z)^a (1+z)^b = λ^a (2-λ)^b` for Jacobi.
pub fn weight_function(spec: &BasisSpec, lambda: f64) -> Option<f64> {
    let jac = |a: f64, b: f64| lambda.powf(a) * (2.0 - lambda).powf(b);
    match spec.family {
        BasisFamily::Jacobi { a, b } => Some(jac(a, b)),
        BasisFamily::Chebyshev => Some(jac(-0.5, -0.5)),
        _ => None,
    }
}

pub const CURVE_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisCurvePoint {
    pub lambda: f64,
    pub k: usize,
    pub value: f64,
    pub weight: Option<f64>,
}

/// Every basis polynomial sampled on `points` uniform values of `λ` in
/// `[0, 2]`, grouped by `k`. With `normalize`, each `g_k` is divided by
/// `g_k(λ = 0)`.
pub fn basis_curves(spec: &BasisSpec, points: usize, normalize: bool) -> Result<Vec<BasisCurvePoint>> {
    spec.validate()?;
    if points < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 curve points, got {points}")));
    }
    let scale = if normalize {
        let at_zero = basis_values(spec, 0.0);
        if let Some(k) = at_zero.iter().position(|v| v.abs() < 1e-300) {
            return Err(Error::Unsupported(format!("{spec}: g_{k} vanishes at λ = 0 and cannot be normalized there")));
        }
        at_zero
    } else {
        vec![1.0; spec.num_terms()]
    };
    let grid: Vec<f64> = (0..points).map(|i| 2.0 * i as f64 / (points - 1) as f64).collect();
    let values: Vec<Vec<f64>> = grid.iter().map(|&l| basis_values(spec, l)).collect();
    let mut out = Vec::with_capacity(points * spec.num_terms());
    for k in 0..spec.num_terms() {
        for (i, &lambda) in grid.iter().enumerate() {
            out.push(BasisCurvePoint {
                lambda,
                k,
                value: values[i][k] / scale[k],
                weight: weight_function(spec, lambda).filter(|w| w.is_finite()),
            });
        }
    }
    Ok(out)
}

/// CSV with header `lambda,k,value,weight`; `weight` is empty where the
/// family has no closed-form weight or it is infinite.
pub fn write_basis_curves_csv<W: std::io::Write>(rows: &[BasisCurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "k", "value", "weight"])?;
    for r in rows {
        w.write_record([
            r.lambda.to_string(),
            r.k.to_string(),
            r.value.to_string(),
            r.weight.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Operator application

fn axpy(y: &mut DVector<f64>, a: f64, x: &DVector<f64>) {
    y.axpy(a, x, 1.0);
}

/// `B_k = g_k(Â) h` for `k = 0..=K`, via the family's recurrence with
/// exactly `K` operator applications (Bernstein: `K + K(K+1)/2`).
///
/// With `gammas = Some(γ_1..γ_K)` (Jacobi only) the scaled recurrence of
/// polynomial coefficient decomposition is used, which yields
/// `B̃_k = (∏_{i≤k} γ_i) B_k`.
pub fn apply_basis<O: LinearOperator + ?Sized>(
    spec: &BasisSpec,
    a_hat: &O,
    h: &DVector<f64>,
    gammas: Option<&[f64]>,
) -> Result<Vec<DVector<f64>>> {
    let n = a_hat.dim();
    if h.len() != n {
        return Err(Error::Dimension {
            context: "basis input signal",
            expected: n,
            got: h.len(),
        });
    }
    if let Some(g) = gammas {
        if !matches!(spec.family, BasisFamily::Jacobi { .. }) {
            return Err(Error::Unsupported(format!(
                "coefficient decomposition needs the Jacobi basis, not {}",
                spec.label()
            )));
        }
        if g.len() != spec.degree {
            return Err(Error::Dimension {
                context: "gamma vector",
                expected: spec.degree,
                got: g.len(),
            });
        }
    }
    let kmax = spec.degree;
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(kmax + 1);
    let op = |x: &DVector<f64>| a_hat.apply(x);

    match &spec.family {
        BasisFamily::Monomial | BasisFamily::FixedAppnp { .. } | BasisFamily::FixedSgc => {
            out.push(h.clone());
            for k in 1..=kmax {
                let next = op(&out[k - 1]);
                out.push(next);
            }
        }
        BasisFamily::Chebyshev => {
            out.push(h.clone());
            if kmax >= 1 {
                out.push(op(h));
            }
            for k in 2..=kmax {
                let mut next = op(&out[k - 1]) * 2.0;
                axpy(&mut next, -1.0, &out[k - 2]);
                out.push(next);
            }
        }
        BasisFamily::Jacobi { a, b } => {
            let gamma = |i: usize| gammas.map_or(1.0, |g| g[i - 1]);
            out.push(h.clone());
            if kmax >= 1 {
                let mut p1 = op(h) * ((a + b + 2.0) / 2.0);
                axpy(&mut p1, (a - b) / 2.0, h);
                out.push(p1 * gamma(1));
            }
            for k in 2..=kmax {
                let c = jacobi_recurrence(*a, *b, k)?;
                let gk = gamma(k);
                let mut next = op(&out[k - 1]) * (gk * c.theta);
                axpy(&mut next, gk * c.theta_prime, &out[k - 1]);
                axpy(&mut next, -gk * gamma(k - 1) * c.theta_dprime, &out[k - 2]);
                out.push(next);
            }
        }
        BasisFamily::Bernstein => {
            // t_j = (L̂/2)^j h, then B_k = C(K,k) ((I+Â)/2)^{K-k} t_k.
            let mut t = Vec::with_capacity(kmax + 1);
            t.push(h.clone());
            for j in 1..=kmax {
                let prev: &DVector<f64> = &t[j - 1];
                let mut next = prev.clone();
                axpy(&mut next, -1.0, &op(prev));
                t.push(next * 0.5);
            }
            for (k, tk) in t.into_iter().enumerate() {
                let mut v = tk;
                for _ in 0..kmax - k {
                    let mut next = op(&v);
                    next += &v;
                    v = next * 0.5;
                }
                out.push(v * binomial(kmax, k));
            }
        }
        BasisFamily::OrthoFitted(rec) => {
            out.push(h * rec.p0);
            for k in 0..kmax {
                let mut next = op(&out[k]);
                axpy(&mut next, -rec.alpha[k], &out[k]);
                if k > 0 {
                    axpy(&mut next, -rec.beta[k], &out[k - 1]);
                }
                out.push(next / rec.beta[k + 1]);
            }
        }
    }
    Ok(out)
}
