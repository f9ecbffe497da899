//! A laboratory for finite Markov chain mixing: weighted networks and their
//! lazy/continuous-time walks, chain transformations (perturbation, lumping,
//! stretching, decoration, non-backtracking lifts), exact worst-case distance
//! profiles, spectral and Cheeger analysis, exact hitting-time distributions,
//! generators for the chain families studied here, and reproducible
//! experiments over all of it.

pub mod chain;
pub mod constructions;
pub mod distances;
pub mod error;
pub mod experiments;
pub mod hitting;
pub mod network;
pub mod numeric;
pub mod spectral;
pub mod transforms;

pub use chain::{build_chain, check_reversibility, heat_kernel_row, Chain, Distribution};
pub use error::{MixError, Result};
pub use network::{NetworkBuilder, NetworkFile, WeightedNetwork};
