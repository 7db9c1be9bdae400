//! Automorphism enumeration on small graphs and the exhaustive scan relating
//! symmetry to multiple Laplacian eigenvalues.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::{cluster_eigenvalues, diagnose, laplacian_spectrum, DEFAULT_TOL_EIG, DEFAULT_TOL_MISSING};

pub const MAX_AUTOMORPHISM_NODES: usize = 8;
pub const MAX_SCAN_NODES: usize = 7;

/// All automorphisms of `g`, as permutations `π` with `π[i]` the image of
/// node `i`. With features, rows must also match exactly: `X_{π(i)} = X_i`.
pub fn automorphisms(g: &Graph, x: Option<&DMatrix<f64>>) -> Result<Vec<Vec<usize>>> {
    let n = g.n();
    if n > MAX_AUTOMORPHISM_NODES {
        return Err(Error::TooLarge { what: "automorphism search nodes", got: n, limit: MAX_AUTOMORPHISM_NODES });
    }
    if let Some(x) = x {
        if x.nrows() != n {
            return Err(Error::Dimension { context: "automorphism features", expected: n, got: x.nrows() });
        }
    }
    let same_row = |i: usize, j: usize| x.is_none_or(|x| x.row(i) == x.row(j));
    let mut out = Vec::new();
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend(g, &same_row, 0, &mut perm, &mut used, &mut out);
    Ok(out)
}

fn extend(
    g: &Graph,
    same_row: &dyn Fn(usize, usize) -> bool,
    u: usize,
    perm: &mut Vec<usize>,
    used: &mut Vec<bool>,
    out: &mut Vec<Vec<usize>>,
) {
    let n = g.n();
    if u == n {
        out.push(perm.clone());
        return;
    }
    for v in 0..n {
        if used[v] || g.degree(u) != g.degree(v) || !same_row(u, v) {
            continue;
        }
        if (0..u).any(|w| g.has_edge(u, w) != g.has_edge(v, perm[w])) {
            continue;
        }
        perm[u] = v;
        used[v] = true;
        extend(g, same_row, u + 1, perm, used, out);
        used[v] = false;
    }
    perm[u] = usize::MAX;
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Smallest `k ≥ 1` with `π^k = id`: the lcm of the cycle lengths.
pub fn permutation_order(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut order = 1;
    for start in 0..perm.len() {
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len > 0 {
            order = order / gcd(order, len) * len;
        }
    }
    order
}

pub fn automorphism_orders(g: &Graph, x: Option<&DMatrix<f64>>) -> Result<BTreeSet<usize>> {
    Ok(automorphisms(g, x)?.iter().map(|p| permutation_order(p)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCounterexample {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    /// Feature set the automorphisms had to respect, if any.
    pub features: Option<String>,
    pub orders: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetryScanReport {
    pub n_max: usize,
    /// Labeled graphs examined (every edge subset for each `n`).
    pub graphs: u64,
    pub distinct_spectrum: u64,
    /// Distinct-spectrum graphs with an automorphism of order three or more.
    pub order_counterexamples: Vec<ScanCounterexample>,
    /// (graph, feature set) pairs with a distinct spectrum and no missing
    /// frequency component.
    pub full_component_cases: u64,
    /// Of those, cases with a non-identity automorphism respecting the features.
    pub identity_counterexamples: Vec<ScanCounterexample>,
}

impl SymmetryScanReport {
    pub fn passed(&self) -> bool {
        self.order_counterexamples.is_empty() && self.identity_counterexamples.is_empty()
    }

    fn merge(mut self, other: SymmetryScanReport) -> Self {
        self.graphs += other.graphs;
        self.distinct_spectrum += other.distinct_spectrum;
        self.full_component_cases += other.full_component_cases;
        self.order_counterexamples.extend(other.order_counterexamples);
        self.identity_counterexamples.extend(other.identity_counterexamples);
        self
    }
}

fn graph_from_mask(n: usize, pairs: &[(usize, usize)], mask: u64) -> Result<Graph> {
    let edges = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e);
    Graph::from_edges(n, edges)
}

/// Constant and degree features; both are invariant under every automorphism
/// of the bare graph, so they exercise the missing-component condition.
fn symmetric_features(g: &Graph) -> [(&'static str, DMatrix<f64>); 2] {
    let n = g.n();
    [
        ("constant", DMatrix::from_element(n, 1, 1.0)),
        ("degree", DMatrix::from_fn(n, 1, |i, _| g.degree(i) as f64)),
    ]
}

fn scan_one(n: usize, pairs: &[(usize, usize)], mask: u64) -> Result<SymmetryScanReport> {
    let g = graph_from_mask(n, pairs, mask)?;
    let mut report = SymmetryScanReport { graphs: 1, ..Default::default() };
    let s = laplacian_spectrum(&g)?;
    if cluster_eigenvalues(&s.eigenvalues, DEFAULT_TOL_EIG).len() < n {
        return Ok(report);
    }
    report.distinct_spectrum = 1;
    let edges: Vec<_> = g.edges().collect();
    let orders = automorphism_orders(&g, None)?;
    if orders.iter().any(|&o| o >= 3) {
        report.order_counterexamples.push(ScanCounterexample {
            n,
            edges: edges.clone(),
            features: None,
            orders: orders.into_iter().collect(),
        });
    }
    for (name, x) in symmetric_features(&g) {
        let d = diagnose(&s, Some(&x), DEFAULT_TOL_MISSING, DEFAULT_TOL_EIG)?;
        if d.n_missing != Some(0) {
            continue;
        }
        report.full_component_cases += 1;
        let autos = automorphisms(&g, Some(&x))?;
        if autos.len() > 1 {
            report.identity_counterexamples.push(ScanCounterexample {
                n,
                edges: edges.clone(),
                features: Some(name.to_string()),
                orders: autos.iter().map(|p| permutation_order(p)).collect::<BTreeSet<_>>().into_iter().collect(),
            });
        }
    }
    Ok(report)
}

/// Every labeled graph on `1..=n_max` nodes: distinct normalized-Laplacian
/// eigenvalues must rule out automorphisms of order three or more, and with
/// no missing frequency component in the (constant or degree) features,
/// every automorphism respecting them must be the identity.
pub fn symmetry_scan(n_max: usize) -> Result<SymmetryScanReport> {
    if n_max > MAX_SCAN_NODES {
        return Err(Error::TooLarge { what: "exhaustive scan nodes", got: n_max, limit: MAX_SCAN_NODES });
    }
    let mut total = SymmetryScanReport { n_max, ..Default::default() };
    for n in 1..=n_max {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let count = 1u64 << pairs.len();
        let part = (0..count)
            .into_par_iter()
            .map(|mask| scan_one(n, &pairs, mask))
            .try_reduce(SymmetryScanReport::default, |a, b| Ok(a.merge(b)))?;
        total = total.merge(part);
    }
    let sort_key = |c: &ScanCounterexample| (c.n, c.edges.clone(), c.features.clone());
    total.order_counterexamples.sort_by_key(sort_key);
    total.identity_counterexamples.sort_by_key(sort_key);
    Ok(total)
}
