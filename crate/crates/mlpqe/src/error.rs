//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("FCIDUMP parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate orbital pair: excitation {label} has |denominator| = {denominator:.3e} < 1e-8")]
    DegenerateDenominator { label: String, denominator: f64 },

    #[error("operator label {0} not present in the ansatz pool")]
    UnknownLabel(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("particle-number sector with {n_electrons} electrons on {n_qubits} qubits is empty")]
    EmptySector { n_electrons: usize, n_qubits: usize },

    #[error("training insufficient: only {samples} sample(s) recorded before the residue norm fell below LRNT = {lrnt}; lower the LRNT")]
    TrainingInsufficient { samples: usize, lrnt: f64 },

    #[error("KRR fit failed: {0}")]
    Fit(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("orbital-energy record mismatch: FCIDUMP lists eps[{index}] = {file_value}, computed {computed}")]
    OrbitalEnergyMismatch {
        index: usize,
        file_value: f64,
        computed: f64,
    },

    #[error("replica phase-1 length mismatch: expected {expected} iterations, replica {replica} recorded {got}")]
    ReplicaLengthMismatch {
        expected: usize,
        replica: usize,
        got: usize,
    },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
