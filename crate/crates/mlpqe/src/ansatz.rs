//! Ordered disentangled-UCC excitation pool.
//!
//! Operators are enumerated rank-major, then lexicographically by occupied
//! and virtual index lists. The order is frozen at construction and shared
//! verbatim between the conventional and the ML-embedded ansatz.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::integrals::{DoubleKey, SpinOrbitalBasis};
use crate::pauli::{excitation_image, FermionOperator, PauliSum};

const DENOMINATOR_TOL: f64 = 1e-8;

/// One anti-Hermitian particle-hole generator with its quasi-Newton denominator.
#[derive(Debug, Clone)]
pub struct ExcitationOperator {
    /// Canonical label `rank_occ->virt`, e.g. `2_0,1->2,3`.
    pub label: String,
    pub rank: usize,
    pub occ: Vec<usize>,
    pub virt: Vec<usize>,
    pub kappa_image: PauliSum,
    /// Moller-Plesset denominator `sum eps_occ - sum eps_virt`, Hartree.
    pub denominator: f64,
}

pub fn excitation_label(occ: &[usize], virt: &[usize]) -> String {
    let fmt = |xs: &[usize]| {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    format!("{}_{}->{}", occ.len(), fmt(occ), fmt(virt))
}

/// Ordered operator list with its aligned parameter vector.
#[derive(Debug, Clone)]
pub struct AnsatzPool {
    pub operators: Vec<ExcitationOperator>,
    pub theta: Vec<f64>,
    label_index: HashMap<String, usize>,
}

impl AnsatzPool {
    fn from_operators(operators: Vec<ExcitationOperator>, theta: Vec<f64>) -> Self {
        let label_index = operators
            .iter()
            .enumerate()
            .map(|(i, op)| (op.label.clone(), i))
            .collect();
        AnsatzPool {
            operators,
            theta,
            label_index,
        }
    }

    pub fn n_par(&self) -> usize {
        self.operators.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.label_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn labels(&self) -> Vec<String> {
        self.operators.iter().map(|op| op.label.clone()).collect()
    }

    /// Same pool with a replaced parameter vector.
    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), self.n_par());
        AnsatzPool {
            operators: self.operators.clone(),
            theta,
            label_index: self.label_index.clone(),
        }
    }

    /// Debug/golden dump: `label denominator theta`, one line per operator.
    pub fn dump(&self) -> String {
        self.operators
            .iter()
            .zip(&self.theta)
            .map(|(op, th)| format!("{} {:.16e} {:.16e}\n", op.label, op.denominator, th))
            .collect()
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // rightmost index that can still advance
        let mut i = k as isize - 1;
        while i >= 0 && idx[i as usize] == i as usize + n - k {
            i -= 1;
        }
        if i < 0 {
            return out;
        }
        let i = i as usize;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn sz(indices: &[usize]) -> i32 {
    // alpha (even) counts +1, beta (odd) -1
    indices
        .iter()
        .map(|&p| if SpinOrbitalBasis::spin(p) == 0 { 1 } else { -1 })
        .sum()
}

/// All spin- and particle-conserving excitations of rank `1..=max_rank`,
/// theta initialized to zero.
pub fn generate_pool(basis: &SpinOrbitalBasis, max_rank: usize) -> Result<AnsatzPool> {
    assert!((1..=4).contains(&max_rank), "max_rank must be in 1..=4");
    let occ_orbitals = basis.occupied.clone();
    let virt_orbitals = basis.virtuals();
    let mut operators = Vec::new();
    for rank in 1..=max_rank {
        for occ in combinations(&occ_orbitals, rank) {
            for virt in combinations(&virt_orbitals, rank) {
                if sz(&occ) != sz(&virt) {
                    continue;
                }
                let denominator: f64 = occ.iter().map(|&i| basis.epsilon[i]).sum::<f64>()
                    - virt.iter().map(|&a| basis.epsilon[a]).sum::<f64>();
                let label = excitation_label(&occ, &virt);
                if denominator.abs() < DENOMINATOR_TOL {
                    return Err(Error::DegenerateDenominator {
                        label,
                        denominator,
                    });
                }
                let kappa = FermionOperator::kappa(&occ, &virt);
                let kappa_image = excitation_image(&kappa, basis.n_spin)?;
                operators.push(ExcitationOperator {
                    label,
                    rank,
                    occ: occ.clone(),
                    virt,
                    kappa_image,
                    denominator,
                });
            }
        }
    }
    let theta = vec![0.0; operators.len()];
    Ok(AnsatzPool::from_operators(operators, theta))
}

fn double_key(op: &ExcitationOperator) -> DoubleKey {
    ([op.occ[0], op.occ[1]], [op.virt[0], op.virt[1]])
}

/// Drop doubles whose |MP2 amplitude| does not exceed `cutoff`. Other ranks
/// are retained unconditionally; survivor order is preserved.
pub fn mp2_screen(
    pool: &AnsatzPool,
    t2: &HashMap<DoubleKey, f64>,
    cutoff: f64,
) -> AnsatzPool {
    assert!(cutoff >= 0.0);
    let mut operators = Vec::new();
    let mut theta = Vec::new();
    for (op, &th) in pool.operators.iter().zip(&pool.theta) {
        if op.rank == 2 {
            let t = t2.get(&double_key(op)).copied().unwrap_or(0.0);
            if t.abs() <= cutoff {
                continue;
            }
        }
        operators.push(op.clone());
        theta.push(th);
    }
    AnsatzPool::from_operators(operators, theta)
}

/// Set doubles' theta to their MP2 amplitude, all other ranks to zero.
pub fn init_params_mp2(pool: &AnsatzPool, t2: &HashMap<DoubleKey, f64>) -> AnsatzPool {
    let theta = pool
        .operators
        .iter()
        .map(|op| {
            if op.rank == 2 {
                t2.get(&double_key(op)).copied().unwrap_or(0.0)
            } else {
                0.0
            }
        })
        .collect();
    pool.with_theta(theta)
}
