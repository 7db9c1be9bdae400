//! Synthetic filter-learning tasks on square grids.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::graph::{grid_graph, normalized_adjacency, Graph, SymmetricOperator};
use crate::rng::{derive_seed, gaussian_vector, rng};
use crate::spectral::{laplacian_spectrum, Spectrum};

pub const DEFAULT_SIDE: usize = 32;
/// Inputs are white noise passed through `e^{-SMOOTHING λ}`.
pub const SMOOTHING: f64 = 2.0;

/// Seed tags separating evaluation inputs from tuning inputs.
const EVAL_STREAM: u64 = 0;
const TUNE_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct FilterTask {
    pub filter: FilterKind,
    /// Index of the input signal within its stream.
    pub index: usize,
    /// Seed the input was drawn from.
    pub seed: u64,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl FilterTask {
    pub fn x_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.x.len(), 1, self.x.as_slice())
    }

    pub fn y_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.y.len(), 1, self.y.as_slice())
    }
}

/// A grid, its spectrum and one task per (input, filter).
#[derive(Debug, Clone)]
pub struct FilterTaskSet {
    pub side: usize,
    pub seed: u64,
    pub graph: Graph,
    pub a_hat: SymmetricOperator,
    pub spectrum: Spectrum,
    /// Ordered by filter, then input index.
    pub tasks: Vec<FilterTask>,
}

impl FilterTaskSet {
    pub fn tasks_for(&self, filter: FilterKind) -> impl Iterator<Item = &FilterTask> {
        self.tasks.iter().filter(move |t| t.filter == filter)
    }

    /// `count` further tasks per filter drawn from a separate seed stream,
    /// for hyperparameter selection.
    pub fn tuning_tasks(&self, count: usize) -> Result<Vec<FilterTask>> {
        build_tasks(&self.spectrum, self.seed, TUNE_STREAM, count)
    }
}

/// Smooth random field scaled to `[0, 1]`.
pub fn smooth_input(s: &Spectrum, seed: u64) -> Result<DVector<f64>> {
    let noise = gaussian_vector(&mut rng(seed), s.n(), 1.0);
    let smooth = s.apply_exact_filter(|l| (-SMOOTHING * l).exp(), &noise)?;
    let (lo, hi) = (smooth.min(), smooth.max());
    if !(hi > lo) {
        return Err(Error::Numeric("smoothed input is constant".into()));
    }
    Ok(smooth.map(|v| (v - lo) / (hi - lo)))
}

fn build_tasks(s: &Spectrum, seed: u64, stream: u64, count: usize) -> Result<Vec<FilterTask>> {
    let inputs = (0..count)
        .map(|i| {
            let input_seed = derive_seed(seed, &[stream, i as u64]);
            smooth_input(s, input_seed).map(|x| (input_seed, x))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tasks = Vec::with_capacity(count * FilterKind::BENCHMARK.len());
    for filter in FilterKind::BENCHMARK {
        for (index, (input_seed, x)) in inputs.iter().enumerate() {
            let y = s.apply_exact_filter(|l| filter.eval(l), x)?;
            tasks.push(FilterTask { filter, index, seed: *input_seed, x: x.clone(), y });
        }
    }
    Ok(tasks)
}

/// `count` inputs on a `side × side` grid, each filtered by every benchmark
/// response with the exact spectral oracle.
pub fn make_filter_tasks(side: usize, count: usize, seed: u64) -> Result<FilterTaskSet> {
    if side < 2 {
        return Err(Error::InvalidParameter(format!("grid side must be at least 2, got {side}")));
    }
    let graph = grid_graph(side, side)?;
    let spectrum = laplacian_spectrum(&graph)?;
    let tasks = build_tasks(&spectrum, seed, EVAL_STREAM, count)?;
    Ok(FilterTaskSet { side, seed, a_hat: normalized_adjacency(&graph), graph, spectrum, tasks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> FilterTaskSet {
        make_filter_tasks(6, 2, 11).unwrap()
    }

    #[test]
    fn shape_and_range() {
        let s = set();
        assert_eq!(s.tasks.len(), 10);
        assert_eq!(s.tasks_for(FilterKind::Comb).count(), 2);
        for t in &s.tasks {
            assert_eq!(t.x.len(), 36);
            assert_close!(t.x.min(), 0.0, 1e-15);
            assert_close!(t.x.max(), 1.0, 1e-15);
        }
    }

    #[test]
    fn regenerates_identically() {
        let (a, b) = (set(), set());
        for (s, t) in a.tasks.iter().zip(&b.tasks) {
            assert_eq!(s.x, t.x);
            assert_eq!(s.y, t.y);
        }
        assert_ne!(a.tuning_tasks(1).unwrap()[0].x, a.tasks[0].x);
    }

    #[test]
    fn low_filter_passes_zero_frequency() {
        // The λ = 0 eigenvector of the normalized Laplacian is D^{1/2} 1.
        let s = set();
        let x = DVector::from_fn(36, |i, _| (s.graph.degree(i) as f64).sqrt());
        let y = s.spectrum.apply_exact_filter(|l| FilterKind::Low.eval(l), &x).unwrap();
        assert!((y - x).amax() <= 1e-10);
    }

    #[test]
    fn targets_annihilate_expected_frequencies() {
        let s = set();
        for t in &s.tasks {
            let yt = s.spectrum.gft_vector(&t.y).unwrap();
            let xt = s.spectrum.gft_vector(&t.x).unwrap();
            for (i, &l) in s.spectrum.eigenvalues.iter().enumerate() {
                let near = |c: f64| (l - c).abs() <= 1e-9;
                match t.filter {
                    FilterKind::Reject if near(1.0) => assert!(yt[i].abs() <= 1e-6 * t.x.norm()),
                    FilterKind::Reject if (l - 1.0).abs() <= 0.01 => {
                        assert!(yt[i].abs() <= 1e-3 * xt[i].abs() + 1e-10);
                    }
                    FilterKind::Comb if near(0.0) || near(1.0) || near(2.0) => {
                        assert!(yt[i].abs() <= 1e-9);
                    }
                    _ => {}
                }
            }
        }
    }
}
