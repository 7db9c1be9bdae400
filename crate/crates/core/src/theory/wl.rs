//! 1-WL color refinement and the check that a degree-`K` linear GNN never
//! separates nodes that `K+1` rounds of refinement cannot.

use std::collections::HashMap;
use std::hash::Hash;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bases::BasisSpec;
use crate::graph::{normalized_adjacency, Graph};
use crate::error::{Error, Result};
use crate::model::{LinearGnnModel, ModelOptions};
use crate::rng::{derive_seed, gaussian_matrix, rng};

/// Grid on which continuous features are compared.
pub const FEATURE_QUANTUM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WlColoring {
    /// `labels[t]` is the coloring after `t` rounds; `labels[0]` recodes the
    /// initial labels.
    pub labels: Vec<Vec<usize>>,
    pub iterations: usize,
}

impl WlColoring {
    pub fn last(&self) -> &[usize] {
        &self.labels[self.iterations]
    }

    pub fn num_colors(&self, round: usize) -> usize {
        self.labels[round].iter().max().map_or(0, |m| m + 1)
    }
}

/// Relabel by order of first appearance.
fn recode<T: Hash + Eq + Clone>(values: &[T]) -> Vec<usize> {
    let mut codes = HashMap::new();
    values
        .iter()
        .map(|v| {
            let next = codes.len();
            *codes.entry(v.clone()).or_insert(next)
        })
        .collect()
}

pub fn wl_refine<T: Hash + Eq + Clone>(g: &Graph, init: &[T], iters: usize) -> Result<WlColoring> {
    if init.len() != g.n() {
        return Err(Error::Dimension { context: "initial WL labels", expected: g.n(), got: init.len() });
    }
    let mut labels = vec![recode(init)];
    for _ in 0..iters {
        let prev = labels.last().unwrap();
        let signatures: Vec<(usize, Vec<usize>)> = (0..g.n())
            .map(|u| {
                let mut nb: Vec<usize> = g.neighbors(u).iter().map(|&v| prev[v]).collect();
                nb.sort_unstable();
                (prev[u], nb)
            })
            .collect();
        labels.push(recode(&signatures));
    }
    Ok(WlColoring { labels, iterations: iters })
}

/// Each feature row rounded to the [`FEATURE_QUANTUM`] grid.
pub fn quantize_features(x: &DMatrix<f64>) -> Vec<Vec<i64>> {
    (0..x.nrows())
        .map(|i| x.row(i).iter().map(|v| (v / FEATURE_QUANTUM).round() as i64).collect())
        .collect()
}

/// Whether the partition `fine` refines `coarse`.
pub fn refines(fine: &[usize], coarse: &[usize]) -> bool {
    let mut map = HashMap::new();
    fine.iter().zip(coarse).all(|(f, c)| *map.entry(*f).or_insert(*c) == *c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WlViolation {
    pub trial: usize,
    pub i: usize,
    pub j: usize,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WlBoundReport {
    pub n: usize,
    pub degree: usize,
    pub trials: usize,
    pub seed: u64,
    /// Unordered node pairs sharing a color after `degree + 1` rounds.
    pub equal_pairs: usize,
    pub violations: Vec<WlViolation>,
}

impl WlBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For random monomial-basis models of degree `degree`, nodes with equal
/// `WL_{degree+1}` colors (initialized from quantized features) must get
/// outputs equal up to `1e-8` times the largest output magnitude.
pub fn wl_bound_check(g: &Graph, x: &DMatrix<f64>, degree: usize, trials: usize, seed: u64) -> Result<WlBoundReport> {
    let n = g.n();
    if x.nrows() != n {
        return Err(Error::Dimension { context: "WL features", expected: n, got: x.nrows() });
    }
    let coloring = wl_refine(g, &quantize_features(x), degree + 1)?;
    let colors = coloring.last();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if colors[i] == colors[j] {
                pairs.push((i, j));
            }
        }
    }
    let a_hat = normalized_adjacency(g);
    let mut violations = Vec::new();
    for trial in 0..trials {
        let mut r = rng(derive_seed(seed, &[trial as u64]));
        let mut model = LinearGnnModel::init(x.ncols(), 1, BasisSpec::monomial(degree), ModelOptions::default(), 0)?;
        model.weight = gaussian_matrix(&mut r, x.ncols(), 1, 1.0);
        model.coeffs = gaussian_matrix(&mut r, degree + 1, 1, 1.0);
        let out = model.forward(&a_hat, x)?;
        let scale = out.amax().max(f64::MIN_POSITIVE);
        for &(i, j) in &pairs {
            let difference = (out[(i, 0)] - out[(j, 0)]).abs();
            if difference > 1e-8 * scale {
                violations.push(WlViolation { trial, i, j, difference });
            }
        }
    }
    Ok(WlBoundReport { n, degree, trials, seed, equal_pairs: pairs.len(), violations })
}
