//! Measurement-count upper bounds and the C-X gate ledger.
//!
//! The gate model is a first-order staircase per Pauli rotation: a string of
//! weight w costs `2(w - 1)` C-X gates, with no cancellation between
//! adjacent rotations. Only ratios matter for the cost claims; the model is
//! fixed so curves are reproducible.

use crate::ansatz::AnsatzPool;
use crate::error::{Error, Result};
use crate::pauli::PauliSum;

/// Upper bound on measurements for one residue vector:
/// `n * ceil(3 (sum|h_l|)^2 / eps^2)`.
///
/// The ceiling is taken on the per-entry bound before multiplying by `n`,
/// so the reduced/full bound ratio is exactly `n_P / N`.
pub fn measurement_bound(n: usize, one_norm: f64, eps: f64) -> Result<u128> {
    if eps <= 0.0 {
        return Err(Error::Invalid(format!(
            "measurement precision must be positive, got {eps}"
        )));
    }
    let per_entry = (3.0 * one_norm * one_norm / (eps * eps)).ceil() as u128;
    Ok(n as u128 * per_entry)
}

/// Measurement budget for one residue-vector construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementBudget {
    pub epsilon_res: f64,
    pub one_norm: f64,
    pub n_params_measured: usize,
    pub bound: u128,
}

impl MeasurementBudget {
    pub fn new(n_params_measured: usize, one_norm: f64, epsilon_res: f64) -> Result<Self> {
        Ok(MeasurementBudget {
            epsilon_res,
            one_norm,
            n_params_measured,
            bound: measurement_bound(n_params_measured, one_norm, epsilon_res)?,
        })
    }
}

/// C-X count of one exponential factor under the staircase model.
pub fn cx_count_factor(kappa_image: &PauliSum) -> u64 {
    kappa_image
        .terms()
        .iter()
        .map(|t| 2 * (t.weight().max(1) as u64 - 1))
        .sum()
}

/// C-X count of the full ansatz circuit.
pub fn cx_count_ansatz(pool: &AnsatzPool) -> u64 {
    pool.operators
        .iter()
        .map(|op| cx_count_factor(&op.kappa_image))
        .sum()
}

/// Cost increment of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IterationCost {
    pub n_residues: usize,
    pub cx: u64,
}

/// Circuits of one iteration under the diagonal-residue protocol: per
/// measured entry one `Omega_mu(pi/4)` circuit (its factor plus the ansatz)
/// and one ansatz circuit for `E_mu`, plus a single shared `E_0` ansatz
/// circuit.
pub fn ledger_iteration(pool: &AnsatzPool, measured: &[usize]) -> IterationCost {
    let cx_ansatz = cx_count_ansatz(pool);
    let mut cx = cx_ansatz; // shared E_0 circuit
    for &idx in measured {
        let factor = cx_count_factor(&pool.operators[idx].kappa_image);
        cx += (cx_ansatz + factor) + cx_ansatz;
    }
    IterationCost {
        n_residues: measured.len(),
        cx,
    }
}

/// Per-iteration and cumulative C-X counts of a run.
#[derive(Debug, Clone, Default)]
pub struct GateLedger {
    pub per_iteration: Vec<IterationCost>,
}

impl GateLedger {
    pub fn push(&mut self, cost: IterationCost) {
        self.per_iteration.push(cost);
    }

    pub fn cumulative_cx(&self) -> Vec<u64> {
        self.per_iteration
            .iter()
            .scan(0u64, |acc, c| {
                *acc += c.cx;
                Some(*acc)
            })
            .collect()
    }
}
