//! Undirected graphs in CSR form and the normalized operators built from them.
//!
//! A [`Graph`] is immutable once constructed. Construction canonicalizes the
//! edge set: both directions are stored, duplicates and self-loops are
//! dropped. The normalized adjacency uses the convention `D^{-1/2}_ii = 0`
//! for isolated nodes, so their Laplacian diagonal is exactly 1.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, derive_seed};

/// Anything that can be applied to a vector as a square linear map.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y <- A x`. `y` is fully overwritten.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim());
        self.apply_into(x.as_slice(), y.as_mut_slice());
        y
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..self.ncols()).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    features: Option<DMatrix<f64>>,
    labels: Option<Vec<usize>>,
}

impl Graph {
    /// Build a graph from an arbitrary edge list. Each undirected edge may
    /// appear in either or both directions, any number of times.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        let mut self_loops = 0usize;
        let mut seen = 0usize;
        for (u, v) in edges {
            for idx in [u, v] {
                if idx >= n {
                    return Err(Error::Bounds { index: idx, n });
                }
            }
            seen += 1;
            if u == v {
                self_loops += 1;
                continue;
            }
            set.insert((u.min(v), u.max(v)));
        }
        if self_loops > 0 {
            log::warn!("dropped {self_loops} self-loop(s)");
        }
        let dups = seen - self_loops - set.len();
        if dups > 0 {
            log::warn!("merged {dups} duplicate edge record(s)");
        }
        Ok(Self::from_canonical(n, &set))
    }

    fn from_canonical(n: usize, edges: &BTreeSet<(usize, usize)>) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(2 * edges.len());
        row_ptr.push(0);
        for mut nbrs in adj {
            nbrs.sort_unstable();
            col_idx.extend(nbrs);
            row_ptr.push(col_idx.len());
        }
        Graph {
            n,
            row_ptr,
            col_idx,
            features: None,
            labels: None,
        }
    }

    pub fn with_features(mut self, x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != self.n {
            return Err(Error::Dimension {
                context: "feature rows",
                expected: self.n,
                got: x.nrows(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("features must be finite".into()));
        }
        self.features = Some(x);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Dimension {
                context: "label count",
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row_ptr[u + 1] - self.row_ptr[u]
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn features(&self) -> Option<&DMatrix<f64>> {
        self.features.as_ref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.labels().map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Disjoint union; node indices of `other` are shifted by `self.n()`.
    /// Features are stacked when both sides carry them.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Graph> {
        let off = self.n;
        let edges = self
            .edges()
            .chain(other.edges().map(|(u, v)| (u + off, v + off)));
        let mut g = Graph::from_edges(self.n + other.n, edges)?;
        if let (Some(a), Some(b)) = (self.features(), other.features()) {
            if a.ncols() != b.ncols() {
                return Err(Error::Dimension {
                    context: "feature columns in union",
                    expected: a.ncols(),
                    got: b.ncols(),
                });
            }
            let mut x = DMatrix::zeros(g.n, a.ncols());
            x.rows_mut(0, off).copy_from(a);
            x.rows_mut(off, other.n).copy_from(b);
            g = g.with_features(x)?;
        }
        Ok(g)
    }
}

/// A symmetric sparse matrix in CSR form. Values for `(u, v)` and `(v, u)`
/// are computed by the same expression, so symmetry holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[u]..self.row_ptr[u + 1]];
        match cols.binary_search(&v) {
            Ok(k) => self.values[self.row_ptr[u] + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[u]..self.row_ptr[u + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for u in 0..self.n {
            for (v, w) in self.row(u) {
                m[(u, v)] = w;
            }
        }
        m
    }

    /// Exact structural and numerical symmetry check.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|u| self.row(u).all(|(v, w)| self.get(v, u) == w))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Applies the operator to each column of `x`.
    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for j in 0..x.ncols() {
            self.apply_into(x.column(j).as_slice(), out.column_mut(j).as_mut_slice());
        }
        out
    }
}

impl LinearOperator for SymmetricOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (u, yu) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[u]..self.row_ptr[u + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yu = acc;
        }
    }
}

fn inv_sqrt_degrees(g: &Graph) -> Vec<f64> {
    (0..g.n())
        .map(|u| match g.degree(u) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect()
}

/// `Â = D^{-1/2} A D^{-1/2}`.
pub fn normalized_adjacency(g: &Graph) -> SymmetricOperator {
    let s = inv_sqrt_degrees(g);
    let values = (0..g.n())
        .flat_map(|u| g.neighbors(u).iter().map(move |&v| (u, v)))
        .map(|(u, v)| s[u.min(v)] * s[u.max(v)])
        .collect();
    SymmetricOperator {
        n: g.n(),
        row_ptr: g.row_ptr.clone(),
        col_idx: g.col_idx.clone(),
        values,
    }
}

/// `L̂ = I - Â`, stored with an explicit diagonal.
pub fn normalized_laplacian(g: &Graph) -> SymmetricOperator {
    let s = inv_sqrt_degrees(g);
    let mut row_ptr = Vec::with_capacity(g.n() + 1);
    let mut col_idx = Vec::with_capacity(g.col_idx.len() + g.n());
    let mut values = Vec::with_capacity(g.col_idx.len() + g.n());
    row_ptr.push(0);
    for u in 0..g.n() {
        let mut diag_done = false;
        for &v in g.neighbors(u) {
            if !diag_done && v > u {
                col_idx.push(u);
                values.push(1.0);
                diag_done = true;
            }
            col_idx.push(v);
            values.push(-(s[u.min(v)] * s[u.max(v)]));
        }
        if !diag_done {
            col_idx.push(u);
            values.push(1.0);
        }
        row_ptr.push(col_idx.len());
    }
    SymmetricOperator {
        n: g.n(),
        row_ptr,
        col_idx,
        values,
    }
}

/// Build a [`SymmetricOperator`] from a dense matrix, keeping entries with
/// `|a_ij| > 0`. Symmetry is enforced by reading only the upper triangle.
pub fn operator_from_dense(m: &DMatrix<f64>) -> Result<SymmetricOperator> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            context: "square operator",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = m[(i.min(j), i.max(j))];
            if w != 0.0 {
                col_idx.push(j);
                values.push(w);
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SymmetricOperator {
        n,
        row_ptr,
        col_idx,
        values,
    })
}

// ---------------------------------------------------------------------------
// Edge-list and CSV I/O

/// Parse the edge-list text format: `#` comments, an optional `# n=<count>`
/// header, and one whitespace-separated `u v` pair per line.
pub fn parse_edge_list(text: &str, origin: &Path) -> Result<Graph> {
    let mut declared_n: Option<usize> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(count) = comment.trim().strip_prefix("n=") {
                let n = count.trim().parse::<usize>().map_err(|e| Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("bad node-count header: {e}"),
                })?;
                declared_n = Some(n);
            }
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let mut toks = line.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(parse_err(format!("expected `u v`, found {line:?}")));
        };
        let u = a
            .parse::<usize>()
            .map_err(|e| parse_err(format!("{a:?}: {e}")))?;
        let v = b
            .parse::<usize>()
            .map_err(|e| parse_err(format!("{b:?}: {e}")))?;
        edges.push((u, v));
    }
    let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = match declared_n {
        Some(n) => {
            if inferred > n {
                return Err(Error::Bounds {
                    index: inferred - 1,
                    n,
                });
            }
            n
        }
        None => inferred,
    };
    Graph::from_edges(n, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text, path)
}

/// Canonical text form: node-count header, then each edge once with `u < v`.
pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("# n={}\n", g.n());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_edge_list(g))?;
    Ok(())
}

/// Read a feature CSV (header row, one row per node, all cells finite reals).
pub fn load_features_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let width = rdr.headers()?.len();
    let mut rows: Vec<f64> = Vec::new();
    let mut count = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected {width} columns, found {}", rec.len()),
            });
        }
        for cell in rec.iter() {
            let v: f64 = cell.trim().parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("{cell:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("non-finite feature {cell:?}"),
                });
            }
            rows.push(v);
        }
        count += 1;
    }
    Ok(DMatrix::from_row_slice(count, width, &rows))
}

/// Read a label CSV (header row, first column holds a non-negative integer).
pub fn load_labels_csv(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(0).unwrap_or("");
        let v = cell.trim().parse::<usize>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            msg: format!("{cell:?}: {e}"),
        })?;
        labels.push(v);
    }
    Ok(labels)
}

pub fn save_features_csv(x: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..x.ncols()).map(|j| format!("x{j}")))?;
    for i in 0..x.nrows() {
        w.write_record((0..x.ncols()).map(|j| format!("{:?}", x[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_labels_csv(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["label"])?;
    for l in labels {
        w.write_record([l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Generators

/// Rows x cols lattice with 4-neighbour connectivity; node `r * cols + c`.
pub fn grid_graph(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid dimensions must be >= 1, got {rows}x{cols}"
        )));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::from_edges(rows * cols, edges)
}

pub fn path_graph(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path edges are in range")
}

pub fn complete_graph(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::from_edges(n, edges).expect("complete-graph edges are in range")
}

pub fn cycle_graph(n: usize) -> Graph {
    let edges = (0..n).map(|i| (i, (i + 1) % n));
    Graph::from_edges(n, edges).expect("cycle edges are in range")
}

/// G(n, p) random graph.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("edge probability {p} not in [0,1]")));
    }
    let mut r = rng::rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SbmParams {
    /// `blocks` equal blocks of `size` nodes each.
    pub fn uniform(blocks: usize, size: usize, p_in: f64, p_out: f64) -> Self {
        SbmParams {
            sizes: vec![size; blocks],
            p_in,
            p_out,
            feature_dim: blocks,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// Stochastic block model with labels = block ids and features =
/// one-hot(block) padded to `feature_dim`, plus Gaussian noise.
pub fn sbm_generate(p: &SbmParams) -> Result<Graph> {
    for (name, prob) in [("p_in", p.p_in), ("p_out", p.p_out)] {
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::InvalidParameter(format!("{name} = {prob} not in [0,1]")));
        }
    }
    let blocks = p.sizes.len();
    if blocks == 0 {
        return Err(Error::InvalidParameter("SBM needs at least one block".into()));
    }
    if p.feature_dim < blocks {
        return Err(Error::InvalidParameter(format!(
            "feature_dim {} is smaller than the block count {blocks}",
            p.feature_dim
        )));
    }
    if !(p.noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise {} must be >= 0", p.noise)));
    }
    let labels: Vec<usize> = p
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = labels.len();

    let mut edge_rng = rng::rng(derive_seed(p.seed, &[0]));
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let prob = if labels[u] == labels[v] { p.p_in } else { p.p_out };
            if edge_rng.random::<f64>() < prob {
                edges.push((u, v));
            }
        }
    }
    let g = Graph::from_edges(n, edges)?;
    if !g.is_connected() {
        log::warn!("generated SBM graph is disconnected");
    }

    let mut feat_rng = rng::rng(derive_seed(p.seed, &[1]));
    let mut x = rng::gaussian_matrix(&mut feat_rng, n, p.feature_dim, p.noise);
    for (i, &l) in labels.iter().enumerate() {
        x[(i, l)] += 1.0;
    }
    g.with_features(x)?.with_labels(labels)
}
