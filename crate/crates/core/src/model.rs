//! Linear spectral GNN `Z_{:l} = Σ_k α_kl g_k(Â) X̂_{:l}` with
//! `X̂ = X W + 1 bᵀ`, its losses and hand-derived gradients.
//!
//! With polynomial coefficient decomposition (PCD) the stored coefficients
//! are `β` and the effective ones are `α_kl = β_kl Γ_k`, where
//! `Γ_k = ∏_{i≤k} γ' tanh(η_i)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bases::{apply_basis, fixed_coeffs, BasisSpec};
use crate::error::{Error, Result};
use crate::graph::SymmetricOperator;
use crate::rng::{rng, uniform_matrix, SeededRng};

/// PCD parameters: `γ_i = gamma_cap · tanh(eta[i-1])` for `i = 1..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pcd {
    pub eta: Vec<f64>,
    pub gamma_cap: f64,
}

impl Pcd {
    pub fn gammas(&self) -> Vec<f64> {
        self.eta.iter().map(|e| self.gamma_cap * e.tanh()).collect()
    }

    /// `Γ_0..Γ_K`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = vec![1.0];
        for g in self.gammas() {
            out.push(out.last().unwrap() * g);
        }
        out
    }

    /// `η` giving `γ_i = gamma_cap · min(0.9, 1/gamma_cap)` everywhere.
    pub fn initial(degree: usize, gamma_cap: f64) -> Self {
        Pcd {
            eta: vec![(1.0 / gamma_cap).min(0.9).atanh(); degree],
            gamma_cap,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub bias: bool,
    /// `Some(γ')` enables PCD (Jacobi basis only).
    pub pcd: Option<f64>,
    /// One coefficient column shared by every output channel.
    pub unifilter: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGnnModel {
    pub spec: BasisSpec,
    /// `d × d'`.
    pub weight: DMatrix<f64>,
    pub bias: Option<DVector<f64>>,
    /// `(K+1) × d'`, or `(K+1) × 1` with `unifilter`.
    pub coeffs: DMatrix<f64>,
    pub pcd: Option<Pcd>,
    pub unifilter: bool,
}

impl LinearGnnModel {
    /// `W ~ U(±√(1/d))`, zero bias, coefficients selecting `g_0` (or the
    /// frozen ones for fixed filters).
    pub fn init(d: usize, d_out: usize, spec: BasisSpec, opts: ModelOptions, seed: u64) -> Result<Self> {
        if d == 0 || d_out == 0 {
            return Err(Error::InvalidParameter("model dimensions must be positive".into()));
        }
        spec.validate()?;
        if let Some(cap) = opts.pcd {
            if !matches!(spec.family, crate::bases::BasisFamily::Jacobi { .. }) {
                return Err(Error::Unsupported(format!(
                    "coefficient decomposition needs the Jacobi basis, not {}",
                    spec.label()
                )));
            }
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma cap must be positive, got {cap}")));
            }
        }
        let mut r = rng(seed);
        let weight = uniform_matrix(&mut r, d, d_out, (1.0 / d as f64).sqrt());
        let cols = if opts.unifilter { 1 } else { d_out };
        let mut coeffs = DMatrix::zeros(spec.num_terms(), cols);
        if spec.is_learnable() {
            coeffs.row_mut(0).fill(1.0);
        } else {
            let fixed = fixed_coeffs(&spec)?;
            for mut c in coeffs.column_iter_mut() {
                c.copy_from_slice(&fixed);
            }
        }
        Ok(LinearGnnModel {
            pcd: opts.pcd.map(|cap| Pcd::initial(spec.degree, cap)),
            weight,
            bias: opts.bias.then(|| DVector::zeros(d_out)),
            coeffs,
            unifilter: opts.unifilter,
            spec,
        })
    }

    pub fn d_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.weight.ncols()
    }

    fn col(&self, l: usize) -> usize {
        if self.unifilter {
            0
        } else {
            l
        }
    }

    fn cumulative_gammas(&self) -> Vec<f64> {
        match &self.pcd {
            Some(p) => p.cumulative(),
            None => vec![1.0; self.spec.num_terms()],
        }
    }

    /// `α_kl` as applied to channel `l`.
    pub fn effective_coeffs(&self) -> DMatrix<f64> {
        let cum = self.cumulative_gammas();
        DMatrix::from_fn(self.spec.num_terms(), self.d_out(), |k, l| {
            self.coeffs[(k, self.col(l))] * cum[k]
        })
    }

    /// Filter response of channel `l` at `λ`.
    pub fn response(&self, l: usize, lambda: f64) -> f64 {
        let g = crate::bases::basis_values(&self.spec, lambda);
        let a = self.effective_coeffs();
        g.iter().enumerate().map(|(k, gk)| a[(k, l)] * gk).sum()
    }

    pub fn num_parameters(&self) -> usize {
        self.weight.len()
            + self.bias.as_ref().map_or(0, |b| b.len())
            + if self.spec.is_learnable() { self.coeffs.len() } else { 0 }
            + self.pcd.as_ref().map_or(0, |p| p.eta.len())
    }

    pub fn forward(&self, a_hat: &SymmetricOperator, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.forward_inputs(&Inputs::new(a_hat, x))
    }

    pub fn forward_inputs(&self, inp: &Inputs) -> Result<DMatrix<f64>> {
        Ok(self.forward_cached(inp, None)?.0)
    }

    fn check_inputs(&self, inp: &Inputs) -> Result<()> {
        if inp.x.ncols() != self.d_in() {
            return Err(Error::Dimension {
                context: "model input features",
                expected: self.d_in(),
                got: inp.x.ncols(),
            });
        }
        if inp.x.nrows() != inp.a_hat.n() {
            return Err(Error::Dimension {
                context: "feature rows vs graph nodes",
                expected: inp.a_hat.n(),
                got: inp.x.nrows(),
            });
        }
        if let Some(fb) = &inp.basis {
            if fb.spec != self.spec {
                return Err(Error::Precondition("basis cache built for a different basis".into()));
            }
        }
        Ok(())
    }

    fn forward_cached(&self, inp: &Inputs, drop: Option<&DropoutMasks>) -> Result<(DMatrix<f64>, Cache)> {
        self.check_inputs(inp)?;
        let n = inp.x.nrows();
        let (d_out, m) = (self.d_out(), self.spec.num_terms());
        let alpha = self.effective_coeffs();
        let drop = drop.filter(|d| !d.is_empty());
        let mut basis = Vec::with_capacity(d_out);

        let (x_d, hidden) = match (&inp.basis, drop) {
            (Some(fb), None) => {
                let proj: Vec<DMatrix<f64>> = fb.features.iter().map(|bk| bk * &self.weight).collect();
                for l in 0..d_out {
                    let b_l = self.bias.as_ref().map_or(0.0, |b| b[l]);
                    basis.push(DMatrix::from_fn(n, m, |i, k| proj[k][(i, l)] + b_l * fb.ones[(i, k)]));
                }
                (None, None)
            }
            _ => {
                let x_d = match drop.and_then(|d| d.x.as_ref()) {
                    Some(mask) => inp.x.component_mul(mask),
                    None => inp.x.clone(),
                };
                let mut hat = &x_d * &self.weight;
                if let Some(b) = &self.bias {
                    for mut row in hat.row_iter_mut() {
                        row += b.transpose();
                    }
                }
                let hidden = drop.and_then(|d| d.hidden.clone());
                if let Some(mask) = &hidden {
                    hat.component_mul_assign(mask);
                }
                for l in 0..d_out {
                    let cols = apply_basis(&self.spec, inp.a_hat, &hat.column(l).into_owned(), None)?;
                    basis.push(DMatrix::from_columns(&cols));
                }
                (Some(x_d), hidden)
            }
        };

        let mut z = DMatrix::zeros(n, d_out);
        for (l, b_l) in basis.iter().enumerate() {
            z.set_column(l, &(b_l * alpha.column(l)));
        }
        Ok((z, Cache { x_d, hidden, basis, alpha }))
    }

    fn backward(&self, inp: &Inputs, cache: &Cache, g: &DMatrix<f64>) -> Result<Grads> {
        let (d_out, m) = (self.d_out(), self.spec.num_terms());
        let alpha = &cache.alpha;
        let cum = self.cumulative_gammas();

        // ∂R/∂α_kl = B_k(X̂_l)ᵀ G_l
        let mut d_alpha = DMatrix::zeros(m, d_out);
        for l in 0..d_out {
            d_alpha.set_column(l, &cache.basis[l].tr_mul(&g.column(l)));
        }
        let mut d_coeffs = DMatrix::zeros(self.coeffs.nrows(), self.coeffs.ncols());
        for l in 0..d_out {
            for k in 0..m {
                d_coeffs[(k, self.col(l))] += cum[k] * d_alpha[(k, l)];
            }
        }

        let d_eta = self.pcd.as_ref().map(|p| {
            let gam = p.gammas();
            let s: Vec<f64> = (0..m)
                .map(|k| (0..d_out).map(|l| self.coeffs[(k, self.col(l))] * d_alpha[(k, l)]).sum())
                .collect();
            (1..m)
                .map(|i| {
                    let mut dg = 0.0;
                    for (k, sk) in s.iter().enumerate().skip(i) {
                        let others: f64 = (1..=k).filter(|&j| j != i).map(|j| gam[j - 1]).product();
                        dg += sk * others;
                    }
                    let t = p.eta[i - 1].tanh();
                    dg * p.gamma_cap * (1.0 - t * t)
                })
                .collect::<Vec<f64>>()
        });

        let (d_weight, d_bias) = match (&inp.basis, &cache.x_d) {
            (Some(fb), None) => {
                let mut dw = DMatrix::zeros(self.d_in(), d_out);
                for (k, bk) in fb.features.iter().enumerate() {
                    let mk = bk.tr_mul(g);
                    for l in 0..d_out {
                        dw.column_mut(l).axpy(alpha[(k, l)], &mk.column(l), 1.0);
                    }
                }
                let db = self.bias.as_ref().map(|_| {
                    DVector::from_fn(d_out, |l, _| {
                        (0..m).map(|k| alpha[(k, l)] * fb.ones.column(k).dot(&g.column(l))).sum()
                    })
                });
                (dw, db)
            }
            (_, Some(x_d)) => {
                let mut d_hat = DMatrix::zeros(g.nrows(), d_out);
                for l in 0..d_out {
                    let bg = apply_basis(&self.spec, inp.a_hat, &g.column(l).into_owned(), None)?;
                    let mut col = d_hat.column_mut(l);
                    for (k, v) in bg.iter().enumerate() {
                        col.axpy(alpha[(k, l)], v, 1.0);
                    }
                }
                if let Some(mask) = &cache.hidden {
                    d_hat.component_mul_assign(mask);
                }
                let dw = x_d.tr_mul(&d_hat);
                let db = self.bias.as_ref().map(|_| {
                    DVector::from_fn(d_out, |l, _| d_hat.column(l).sum())
                });
                (dw, db)
            }
            (None, None) => unreachable!("uncached forward keeps its input"),
        };

        Ok(Grads { weight: d_weight, bias: d_bias, coeffs: d_coeffs, eta: d_eta })
    }

    /// Loss over `mask` and gradients of every parameter.
    pub fn loss_and_grads(
        &self,
        inp: &Inputs,
        target: &Target,
        mask: &[usize],
        loss: LossKind,
        dropout: Option<&DropoutMasks>,
    ) -> Result<(f64, Grads)> {
        let (z, cache) = self.forward_cached(inp, dropout)?;
        let (value, g) = loss_value_and_grad(&z, target, mask, loss)?;
        let grads = self.backward(inp, &cache, &g)?;
        Ok((value, grads))
    }

    pub fn to_checkpoint(&self, seed: u64, config_hash: String) -> Checkpoint {
        Checkpoint {
            spec: self.spec.clone(),
            d_in: self.d_in(),
            d_out: self.d_out(),
            weight: row_major(&self.weight),
            bias: self.bias.as_ref().map(|b| b.as_slice().to_vec()),
            coeff_columns: self.coeffs.ncols(),
            coeffs: row_major(&self.coeffs),
            pcd: self.pcd.clone(),
            unifilter: self.unifilter,
            seed,
            config_hash,
        }
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Inputs of one graph, optionally with the basis applied to every feature
/// column ahead of time. The cache is valid for any `W`, `b` and
/// coefficients, and is bypassed while dropout is active.
pub struct Inputs<'a> {
    pub a_hat: &'a SymmetricOperator,
    pub x: &'a DMatrix<f64>,
    basis: Option<FeatureBasis>,
}

struct FeatureBasis {
    spec: BasisSpec,
    /// `features[k] = g_k(Â) X`.
    features: Vec<DMatrix<f64>>,
    /// Column `k` is `g_k(Â) 1`.
    ones: DMatrix<f64>,
}

impl<'a> Inputs<'a> {
    pub fn new(a_hat: &'a SymmetricOperator, x: &'a DMatrix<f64>) -> Self {
        Inputs { a_hat, x, basis: None }
    }

    pub fn with_basis_cache(a_hat: &'a SymmetricOperator, x: &'a DMatrix<f64>, spec: &BasisSpec) -> Result<Self> {
        let n = x.nrows();
        if n != a_hat.n() {
            return Err(Error::Dimension {
                context: "feature rows vs graph nodes",
                expected: a_hat.n(),
                got: n,
            });
        }
        let m = spec.num_terms();
        let mut features = vec![DMatrix::zeros(n, x.ncols()); m];
        for j in 0..x.ncols() {
            let bj = apply_basis(spec, a_hat, &x.column(j).into_owned(), None)?;
            for (k, v) in bj.iter().enumerate() {
                features[k].set_column(j, v);
            }
        }
        let ones = DMatrix::from_columns(&apply_basis(spec, a_hat, &DVector::from_element(n, 1.0), None)?);
        Ok(Inputs { a_hat, x, basis: Some(FeatureBasis { spec: spec.clone(), features, ones }) })
    }
}

struct Cache {
    x_d: Option<DMatrix<f64>>,
    hidden: Option<DMatrix<f64>>,
    /// Per output channel, `n × (K+1)` with column `k = g_k(Â) X̂_{:l}`.
    basis: Vec<DMatrix<f64>>,
    alpha: DMatrix<f64>,
}

/// Gradients laid out like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub weight: DMatrix<f64>,
    pub bias: Option<DVector<f64>>,
    pub coeffs: DMatrix<f64>,
    pub eta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    SoftmaxCe,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" | "mse" => Ok(LossKind::Squared),
            "softmax_ce" | "ce" | "cross_entropy" => Ok(LossKind::SoftmaxCe),
            other => Err(Error::InvalidParameter(format!("unknown loss kind {other:?}"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Squared => "squared",
            LossKind::SoftmaxCe => "softmax_ce",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Regression(DMatrix<f64>),
    Classes(Vec<usize>),
}

/// `½ Σ_mask ‖Z_i − Y_i‖²` or the mean softmax cross-entropy over `mask`,
/// with `∂loss/∂Z`.
pub fn loss_value_and_grad(
    z: &DMatrix<f64>,
    target: &Target,
    mask: &[usize],
    loss: LossKind,
) -> Result<(f64, DMatrix<f64>)> {
    if mask.is_empty() {
        return Err(Error::Precondition("loss mask is empty".into()));
    }
    if let Some(&i) = mask.iter().find(|&&i| i >= z.nrows()) {
        return Err(Error::Bounds { index: i, n: z.nrows() });
    }
    let mut g = DMatrix::zeros(z.nrows(), z.ncols());
    match (loss, target) {
        (LossKind::Squared, Target::Regression(y)) => {
            if y.shape() != z.shape() {
                return Err(Error::Dimension { context: "regression target columns", expected: z.ncols(), got: y.ncols() });
            }
            let mut total = 0.0;
            for &i in mask {
                for c in 0..z.ncols() {
                    let r = z[(i, c)] - y[(i, c)];
                    total += 0.5 * r * r;
                    g[(i, c)] = r;
                }
            }
            Ok((total, g))
        }
        (LossKind::SoftmaxCe, Target::Classes(labels)) => {
            if labels.len() != z.nrows() {
                return Err(Error::Dimension { context: "label count", expected: z.nrows(), got: labels.len() });
            }
            let scale = 1.0 / mask.len() as f64;
            let mut total = 0.0;
            for &i in mask {
                let y = labels[i];
                if y >= z.ncols() {
                    return Err(Error::InvalidParameter(format!(
                        "label {y} out of range for {} classes",
                        z.ncols()
                    )));
                }
                let row = z.row(i);
                let mx = row.max();
                let lse = mx + row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
                total += (lse - row[y]) * scale;
                for c in 0..z.ncols() {
                    let p = (row[c] - lse).exp();
                    g[(i, c)] = (p - if c == y { 1.0 } else { 0.0 }) * scale;
                }
            }
            Ok((total, g))
        }
        (loss, _) => Err(Error::Unsupported(format!("loss {loss} does not match the target kind"))),
    }
}

/// Fraction of `mask` rows whose arg-max matches the label.
pub fn accuracy(z: &DMatrix<f64>, labels: &[usize], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let hits = mask.iter().filter(|&&i| z.row(i).transpose().argmax().0 == labels[i]).count();
    hits as f64 / mask.len() as f64
}

/// Inverted-dropout masks with entries `0` or `1/(1-p)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DropoutMasks {
    /// On the input features `X` (`n × d`).
    pub x: Option<DMatrix<f64>>,
    /// On the projected features `X̂` (`n × d'`).
    pub hidden: Option<DMatrix<f64>>,
}

impl DropoutMasks {
    pub fn sample(
        rng: &mut SeededRng,
        shape_x: (usize, usize),
        shape_hidden: (usize, usize),
        p_x: f64,
        p_hidden: f64,
    ) -> Result<Self> {
        let mut draw = |p: f64, (r, c): (usize, usize)| -> Result<Option<DMatrix<f64>>> {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("dropout probability {p} not in [0,1)")));
            }
            if p == 0.0 {
                return Ok(None);
            }
            let keep = 1.0 / (1.0 - p);
            Ok(Some(DMatrix::from_fn(r, c, |_, _| if rng.random::<f64>() < p { 0.0 } else { keep })))
        };
        let x = draw(p_x, shape_x)?;
        let hidden = draw(p_hidden, shape_hidden)?;
        Ok(DropoutMasks { x, hidden })
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_none() && self.hidden.is_none()
    }
}

/// JSON model file; matrices are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: BasisSpec,
    pub d_in: usize,
    pub d_out: usize,
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
    pub coeff_columns: usize,
    pub coeffs: Vec<f64>,
    pub pcd: Option<Pcd>,
    pub unifilter: bool,
    pub seed: u64,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn into_model(self) -> Result<LinearGnnModel> {
        self.spec.validate()?;
        let m = self.spec.num_terms();
        let check = |context: &'static str, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::Dimension { context, expected, got })
            }
        };
        check("checkpoint weight entries", self.d_in * self.d_out, self.weight.len())?;
        check("checkpoint coefficient entries", m * self.coeff_columns, self.coeffs.len())?;
        if let Some(b) = &self.bias {
            check("checkpoint bias entries", self.d_out, b.len())?;
        }
        if let Some(p) = &self.pcd {
            check("checkpoint eta entries", self.spec.degree, p.eta.len())?;
        }
        Ok(LinearGnnModel {
            weight: DMatrix::from_row_slice(self.d_in, self.d_out, &self.weight),
            bias: self.bias.map(DVector::from_vec),
            coeffs: DMatrix::from_row_slice(m, self.coeff_columns, &self.coeffs),
            pcd: self.pcd,
            unifilter: self.unifilter,
            spec: self.spec,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// SHA-256 of the canonical JSON encoding, hex encoded.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi, normalized_adjacency, path_graph};
    use crate::rng::{derive_seed, gaussian_matrix};
    use crate::spectral::laplacian_spectrum;

    fn p2_inputs() -> (SymmetricOperator, DMatrix<f64>) {
        (normalized_adjacency(&path_graph(2)), DMatrix::from_column_slice(2, 1, &[1.0, 0.0]))
    }

    #[test]
    fn fresh_model_is_identity_filter() {
        let g = erdos_renyi(12, 0.3, 1).unwrap();
        let a = normalized_adjacency(&g);
        let x = gaussian_matrix(&mut rng(2), 12, 3, 1.0);
        for (spec, pcd) in [
            (BasisSpec::monomial(4), None),
            (BasisSpec::jacobi(1.0, 1.0, 4).unwrap(), Some(1.0)),
        ] {
            let opts = ModelOptions { bias: true, pcd, unifilter: false };
            let m = LinearGnnModel::init(3, 2, spec, opts, 9).unwrap();
            let z = m.forward(&a, &x).unwrap();
            assert!((z - &x * &m.weight).amax() < 1e-12);
        }
    }

    #[test]
    fn init_is_deterministic() {
        let spec = BasisSpec::chebyshev(3);
        let a = LinearGnnModel::init(5, 2, spec.clone(), ModelOptions::default(), 4).unwrap();
        let b = LinearGnnModel::init(5, 2, spec.clone(), ModelOptions::default(), 4).unwrap();
        assert_eq!(a, b);
        let c = LinearGnnModel::init(5, 2, spec, ModelOptions::default(), 5).unwrap();
        assert_ne!(a.weight, c.weight);
        let bound = (1.0f64 / 5.0).sqrt();
        assert!(a.weight.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn unifilter_stores_one_column() {
        let opts = ModelOptions { unifilter: true, ..Default::default() };
        let m = LinearGnnModel::init(3, 4, BasisSpec::monomial(2), opts, 0).unwrap();
        assert_eq!(m.coeffs.shape(), (3, 1));
        let a = m.effective_coeffs();
        assert_eq!(a.shape(), (3, 4));
        assert!(a.column_iter().all(|c| c == a.column(0)));
    }

    #[test]
    fn pcd_only_with_jacobi() {
        let opts = ModelOptions { pcd: Some(1.0), ..Default::default() };
        assert!(matches!(
            LinearGnnModel::init(2, 2, BasisSpec::monomial(2), opts, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn monomial_first_power_gives_adjacency() {
        let g = erdos_renyi(10, 0.4, 3).unwrap();
        let a = normalized_adjacency(&g);
        let x = gaussian_matrix(&mut rng(1), 10, 2, 1.0);
        let mut m = LinearGnnModel::init(2, 2, BasisSpec::monomial(2), ModelOptions::default(), 0).unwrap();
        m.weight = DMatrix::identity(2, 2);
        m.coeffs = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let z = m.forward(&a, &x).unwrap();
        assert!((z - a.apply_matrix(&x)).amax() < 1e-12);
    }

    #[test]
    fn path_of_two_high_pass() {
        let (a, x) = p2_inputs();
        let mut m = LinearGnnModel::init(1, 1, BasisSpec::monomial(1), ModelOptions::default(), 0).unwrap();
        m.weight = DMatrix::from_element(1, 1, 1.0);
        m.coeffs = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let z = m.forward(&a, &x).unwrap();
        assert_close!(z[(0, 0)], 1.0, 1e-12);
        assert_close!(z[(1, 0)], -1.0, 1e-12);
    }

    #[test]
    fn unit_gammas_match_plain_model() {
        let g = erdos_renyi(15, 0.3, 8).unwrap();
        let a = normalized_adjacency(&g);
        let x = gaussian_matrix(&mut rng(3), 15, 2, 1.0);
        let spec = BasisSpec::jacobi(0.5, 1.5, 5).unwrap();
        let mut plain = LinearGnnModel::init(2, 3, spec.clone(), ModelOptions::default(), 7).unwrap();
        plain.coeffs = gaussian_matrix(&mut rng(4), 6, 3, 1.0);
        let mut pcd = plain.clone();
        pcd.pcd = Some(Pcd { eta: vec![0.5f64.atanh(); 5], gamma_cap: 2.0 });
        let diff = plain.forward(&a, &x).unwrap() - pcd.forward(&a, &x).unwrap();
        assert!(diff.amax() <= 1e-12);
    }

    #[test]
    fn forward_is_spectral_filter() {
        let g = erdos_renyi(20, 0.25, 5).unwrap();
        let s = laplacian_spectrum(&g).unwrap();
        let a = normalized_adjacency(&g);
        let x = gaussian_matrix(&mut rng(6), 20, 3, 1.0);
        let opts = ModelOptions { bias: true, pcd: Some(1.5), unifilter: false };
        let mut m = LinearGnnModel::init(3, 2, BasisSpec::jacobi(1.0, 0.0, 6).unwrap(), opts, 3).unwrap();
        m.coeffs = gaussian_matrix(&mut rng(7), 7, 2, 1.0);
        m.bias = Some(DVector::from_vec(vec![0.3, -0.2]));
        let z = m.forward(&a, &x).unwrap();
        let mut hat = &x * &m.weight;
        for mut row in hat.row_iter_mut() {
            row += m.bias.as_ref().unwrap().transpose();
        }
        let zt = s.gft(&z).unwrap();
        let ht = s.gft(&hat).unwrap();
        for l in 0..2 {
            for (i, &lam) in s.eigenvalues.iter().enumerate() {
                assert_close!(zt[(i, l)], m.response(l, lam) * ht[(i, l)], 1e-8);
            }
        }
    }

    #[test]
    fn zero_residual_zero_gradient() {
        let g = erdos_renyi(10, 0.3, 2).unwrap();
        let a = normalized_adjacency(&g);
        let x = gaussian_matrix(&mut rng(1), 10, 2, 1.0);
        let opts = ModelOptions { bias: true, pcd: Some(1.0), unifilter: false };
        let m = LinearGnnModel::init(2, 2, BasisSpec::jacobi(1.0, 1.0, 3).unwrap(), opts, 0).unwrap();
        let inp = Inputs::new(&a, &x);
        let y = Target::Regression(m.forward_inputs(&inp).unwrap());
        let all: Vec<usize> = (0..10).collect();
        let (loss, grads) = m.loss_and_grads(&inp, &y, &all, LossKind::Squared, None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.weight.amax() == 0.0 && grads.coeffs.amax() == 0.0);
        assert!(grads.bias.unwrap().amax() == 0.0);
        assert!(grads.eta.unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cached_and_direct_paths_agree() {
        let g = erdos_renyi(25, 0.2, 11).unwrap();
        let a = normalized_adjacency(&g);
        let x = gaussian_matrix(&mut rng(12), 25, 3, 1.0);
        let y = Target::Regression(gaussian_matrix(&mut rng(13), 25, 2, 1.0));
        let mask: Vec<usize> = (0..25).step_by(2).collect();
        for spec in [BasisSpec::bernstein(4), BasisSpec::jacobi(-0.5, 0.5, 4).unwrap()] {
            let pcd = matches!(spec.family, crate::bases::BasisFamily::Jacobi { .. }).then_some(1.5);
            let opts = ModelOptions { bias: true, pcd, unifilter: false };
            let mut m = LinearGnnModel::init(3, 2, spec.clone(), opts, 1).unwrap();
            m.coeffs = gaussian_matrix(&mut rng(14), 5, 2, 1.0);
            let direct = Inputs::new(&a, &x);
            let cached = Inputs::with_basis_cache(&a, &x, &spec).unwrap();
            let (l1, g1) = m.loss_and_grads(&direct, &y, &mask, LossKind::Squared, None).unwrap();
            let (l2, g2) = m.loss_and_grads(&cached, &y, &mask, LossKind::Squared, None).unwrap();
            assert_close!(l1, l2, 1e-10 * l1.abs().max(1.0));
            assert!((g1.weight - g2.weight).amax() <= 1e-10);
            assert!((g1.coeffs - g2.coeffs).amax() <= 1e-10);
            assert!((g1.bias.unwrap() - g2.bias.unwrap()).amax() <= 1e-10);
        }
    }

    #[test]
    fn dropout_masks_are_inverted_and_seeded() {
        let mut r1 = rng(derive_seed(5, &[3]));
        let mut r2 = rng(derive_seed(5, &[3]));
        let a = DropoutMasks::sample(&mut r1, (50, 4), (50, 2), 0.5, 0.25).unwrap();
        let b = DropoutMasks::sample(&mut r2, (50, 4), (50, 2), 0.5, 0.25).unwrap();
        assert_eq!(a, b);
        assert!(a.x.unwrap().iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(a.hidden.unwrap().iter().all(|&v| v == 0.0 || v == 1.0 / 0.75));
        let none = DropoutMasks::sample(&mut r1, (5, 1), (5, 1), 0.0, 0.0).unwrap();
        assert!(none.is_empty());
        assert!(DropoutMasks::sample(&mut r1, (5, 1), (5, 1), 1.0, 0.0).is_err());
    }

    #[test]
    fn loss_target_mismatch() {
        let z = DMatrix::zeros(3, 2);
        let err = loss_value_and_grad(&z, &Target::Classes(vec![0, 1, 1]), &[0], LossKind::Squared);
        assert!(err.is_err());
        assert!(loss_value_and_grad(&z, &Target::Classes(vec![0, 1, 1]), &[], LossKind::SoftmaxCe).is_err());
        assert!("hinge".parse::<LossKind>().is_err());
    }

    #[test]
    fn cross_entropy_of_uniform_logits() {
        let z = DMatrix::zeros(4, 3);
        let (l, g) = loss_value_and_grad(&z, &Target::Classes(vec![0, 1, 2, 0]), &[0, 1], LossKind::SoftmaxCe).unwrap();
        assert_close!(l, 3f64.ln(), 1e-14);
        assert_close!(g[(0, 0)], (1.0 / 3.0 - 1.0) / 2.0, 1e-15);
        assert_eq!(g.row(3).amax(), 0.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let opts = ModelOptions { bias: true, pcd: Some(2.0), unifilter: false };
        let m = LinearGnnModel::init(3, 2, BasisSpec::jacobi(1.0, 0.5, 4).unwrap(), opts, 3).unwrap();
        let ck = m.to_checkpoint(3, config_hash(&"cfg").unwrap());
        assert_eq!(ck.weight[1], m.weight[(0, 1)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap().into_model().unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn config_hash_is_stable() {
        let h = config_hash(&serde_json::json!({"a": 1})).unwrap();
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash(&serde_json::json!({"a": 1})).unwrap());
        assert_ne!(h, config_hash(&serde_json::json!({"a": 2})).unwrap());
    }
}
