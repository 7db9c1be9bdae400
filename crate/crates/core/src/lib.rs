//! Linear spectral graph neural networks with pluggable polynomial filter
//! bases, and executable checks of their expressivity and optimization
//! properties.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

#[cfg(test)]
#[macro_use]
mod test_util;

pub mod bases;
pub mod benchmark;
pub mod error;
pub mod filters;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod poly;
pub mod rng;
pub mod spectral;
pub mod theory;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Graph, LinearOperator, SymmetricOperator};
