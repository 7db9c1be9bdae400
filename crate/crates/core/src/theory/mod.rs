//! Executable checks of expressiveness results for linear spectral GNNs.

pub mod automorphism;
pub mod bias;
pub mod interpolation;
pub mod random_features;
pub mod universality;
pub mod wl;
