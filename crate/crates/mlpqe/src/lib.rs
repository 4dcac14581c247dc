//! Machine-learning-aided projective quantum eigensolver on a dense
//! statevector backend.
//!
//! The crate drives disentangled-UCC parameters to a residual fixed point
//! with quasi-Newton updates, then trains a kernel-ridge surrogate that
//! predicts the small-magnitude "auxiliary" parameters from the few
//! "principal" ones so that post-training iterations only measure a reduced
//! residue vector. Cost accounting (C-X gates, measurement bounds), Gaussian
//! residue noise, and trajectory diagnostics are included.

pub mod accounting;
pub mod analysis;
pub mod ansatz;
pub mod config;
pub mod error;
pub mod integrals;
pub mod noise;
pub mod pauli;
pub mod pqe;
pub mod statevector;
pub mod surrogate;

pub use error::{Error, Result};
