//! Post-hoc diagnostics: parameter distance matrices and error curves.

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzPool;
use crate::error::{Error, Result};
use crate::pqe::IterationTrace;

/// Pairwise Euclidean distances between iteration parameter snapshots,
/// optionally restricted to a label subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceMatrix {
    /// Row-major `n x n` over iteration pairs.
    pub values: Vec<Vec<f64>>,
    pub subset: Vec<String>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `‖A - B‖_F / ‖A‖_F` against another matrix of the same shape.
    pub fn relative_frobenius_difference(&self, other: &DistanceMatrix) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::Dimension(format!(
                "{} x {} against {} x {}",
                self.n(),
                self.n(),
                other.n(),
                other.n()
            )));
        }
        let diff = self
            .values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok(diff / self.frobenius_norm())
    }

    /// One CSV row per iteration; linear values (take logs downstream for
    /// plotting).
    pub fn to_csv(&self) -> String {
        self.values
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| format!("{v:.16e}"))
                    .collect::<Vec<_>>()
                    .join(",")
                    + "\n"
            })
            .collect()
    }
}

fn snapshots(trace: &IterationTrace) -> Result<&[crate::pqe::IterationRecord]> {
    if trace.records.iter().any(|r| r.theta.is_empty()) {
        return Err(Error::Invalid(
            "trace lacks parameter snapshots (recorded without theta dumps)".into(),
        ));
    }
    Ok(&trace.records)
}

/// `M_xy = ‖theta_x - theta_y‖₂` restricted to `subset` (all labels when
/// `None`).
pub fn distance_matrix(
    trace: &IterationTrace,
    pool: &AnsatzPool,
    subset: Option<&[String]>,
) -> Result<DistanceMatrix> {
    let records = snapshots(trace)?;
    let (labels, idx): (Vec<String>, Vec<usize>) = match subset {
        Some(labels) => {
            let idx = labels
                .iter()
                .map(|l| pool.index_of(l))
                .collect::<Result<Vec<_>>>()?;
            (labels.to_vec(), idx)
        }
        None => (pool.labels(), (0..pool.n_par()).collect()),
    };
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| idx.iter().map(|&i| r.theta[i]).collect())
        .collect();
    let n = rows.len();
    let mut values = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let d = rows[x]
                .iter()
                .zip(&rows[y])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            values[x][y] = d;
            values[y][x] = d;
        }
    }
    Ok(DistanceMatrix {
        values,
        subset: labels,
    })
}

/// `|E_k - e_ref|` per record.
pub fn energy_error(trace: &IterationTrace, e_ref: f64) -> Vec<f64> {
    trace
        .records
        .iter()
        .map(|r| (r.energy - e_ref).abs())
        .collect()
}

/// `‖theta_k - theta_ref‖₂` per record over the full parameter vector.
pub fn wavefunction_error(trace: &IterationTrace, theta_ref: &[f64]) -> Result<Vec<f64>> {
    let records = snapshots(trace)?;
    records
        .iter()
        .map(|r| {
            if r.theta.len() != theta_ref.len() {
                return Err(Error::Dimension(format!(
                    "snapshot of length {} against reference of length {}",
                    r.theta.len(),
                    theta_ref.len()
                )));
            }
            Ok(r.theta
                .iter()
                .zip(theta_ref)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt())
        })
        .collect()
}

/// Series CSV: `iteration,value`.
pub fn series_csv(values: &[f64]) -> String {
    let mut out = String::from("iteration,value\n");
    for (k, v) in values.iter().enumerate() {
        out.push_str(&format!("{k},{v:.16e}\n"));
    }
    out
}
