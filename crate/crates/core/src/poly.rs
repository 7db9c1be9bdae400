//! Polynomial interpolation in Newton form.
//!
//! Nodes are taken in Leja order (each new node maximizes the product of
//! distances to the previous ones), which keeps divided differences well
//! behaved for dozens of nodes where a Vandermonde solve would not be.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonInterpolant {
    pub nodes: Vec<f64>,
    /// Divided differences `f[x_0..x_k]`.
    pub coeffs: Vec<f64>,
}

impl NewtonInterpolant {
    /// Interpolate `values[i]` at `nodes[i]`; nodes must be pairwise distinct.
    pub fn fit(nodes: &[f64], values: &[f64]) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::Dimension {
                context: "interpolation values",
                expected: nodes.len(),
                got: values.len(),
            });
        }
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("interpolation needs at least one node".into()));
        }
        let order = leja_order(nodes);
        let x: Vec<f64> = order.iter().map(|&i| nodes[i]).collect();
        let mut c: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let n = x.len();
        for j in 1..n {
            for i in (j..n).rev() {
                let den = x[i] - x[i - j];
                if den == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "interpolation nodes repeat at {}",
                        x[i]
                    )));
                }
                c[i] = (c[i] - c[i - 1]) / den;
            }
        }
        Ok(NewtonInterpolant { nodes: x, coeffs: c })
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.coeffs.len();
        let mut acc = self.coeffs[n - 1];
        for j in (0..n - 1).rev() {
            acc = acc * (t - self.nodes[j]) + self.coeffs[j];
        }
        acc
    }

    /// Coefficients `c_k` of `Σ c_k t^k`. Expanding loses accuracy at
    /// high degree; evaluate with [`NewtonInterpolant::eval`] instead.
    pub fn monomial_coeffs(&self) -> Vec<f64> {
        let n = self.coeffs.len();
        let mut p = vec![0.0; n];
        p[0] = self.coeffs[n - 1];
        for (len, j) in (1..).zip((0..n - 1).rev()) {
            // p <- p · (t - x_j) + c_j
            for k in (0..=len).rev() {
                let shifted = if k > 0 { p[k - 1] } else { 0.0 };
                let own = if k < len { p[k] } else { 0.0 };
                p[k] = shifted - self.nodes[j] * own;
            }
            p[0] += self.coeffs[j];
        }
        p
    }
}

/// Permutation of `points` in Leja order, starting from the point of
/// largest magnitude.
pub fn leja_order(points: &[f64]) -> Vec<usize> {
    let n = points.len();
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut score = vec![0.0f64; n];
    let first = (0..n)
        .max_by(|&a, &b| points[a].abs().total_cmp(&points[b].abs()))
        .unwrap_or(0);
    let mut last = first;
    for _ in 0..n {
        if !order.is_empty() {
            last = (0..n)
                .filter(|&i| !used[i])
                .max_by(|&a, &b| score[a].total_cmp(&score[b]))
                .unwrap();
        }
        used[last] = true;
        order.push(last);
        for i in 0..n {
            if !used[i] {
                score[i] += (points[i] - points[last]).abs().ln();
            }
        }
    }
    order
}

/// `1 + cos((2i+1)π / (2n+2))`, `i = 0..=n`: Chebyshev points on `[0, 2]`.
pub fn chebyshev_points(degree: usize) -> Vec<f64> {
    let m = degree + 1;
    (0..m)
        .map(|i| 1.0 + ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos())
        .collect()
}
