//! Shared fixtures and an independent determinant-basis CI oracle.
//!
//! The oracle works directly on occupation bitmasks with second-quantized
//! ladder arithmetic — no qubit mapping, no Pauli algebra — so it checks the
//! production code's Jordan-Wigner path from the outside.

use mlpqe::ansatz::{generate_pool, init_params_mp2, AnsatzPool};
use mlpqe::integrals::{
    self, MolecularIntegrals, SpinIntegrals, SpinOrbitalBasis,
};
use mlpqe::pauli::{hamiltonian_from_integrals, PauliSum};
use mlpqe::pqe::reference_determinant;
use mlpqe::statevector::Determinant;
use nalgebra::DMatrix;

pub struct TestSystem {
    pub ints: MolecularIntegrals,
    pub basis: SpinOrbitalBasis,
    pub hamiltonian: PauliSum,
    pub pool: AnsatzPool,
    pub phi0: Determinant,
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}.fcidump", env!("CARGO_MANIFEST_DIR"))
}

pub fn load(name: &str, max_rank: usize) -> TestSystem {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    let ints = integrals::parse_fcidump(&text).unwrap();
    let basis = integrals::orbital_energies(&ints).unwrap();
    let hamiltonian = hamiltonian_from_integrals(&ints, &basis);
    let pool = generate_pool(&basis, max_rank).unwrap();
    let t2 = integrals::mp2_amplitudes(&basis, &ints).unwrap();
    let pool = init_params_mp2(&pool, &t2);
    let phi0 = reference_determinant(ints.n_electrons);
    TestSystem {
        ints,
        basis,
        hamiltonian,
        pool,
        phi0,
    }
}

/// `a_p |det>` on a bitmask with the usual (-1)^(bits below p) sign.
fn annihilate(det: u64, p: usize) -> Option<(f64, u64)> {
    if det & (1 << p) == 0 {
        return None;
    }
    let sign = if (det & ((1u64 << p) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    Some((sign, det & !(1 << p)))
}

/// `a+_p |det>`.
fn create(det: u64, p: usize) -> Option<(f64, u64)> {
    if det & (1 << p) != 0 {
        return None;
    }
    let sign = if (det & ((1u64 << p) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    Some((sign, det | (1 << p)))
}

/// Lowest eigenvalue of the molecular Hamiltonian over the n-electron
/// determinant space, built without any qubit mapping.
pub fn fci_energy_determinant_basis(ints: &MolecularIntegrals, n_electrons: usize) -> f64 {
    let spin = SpinIntegrals::new(ints);
    let n = 2 * ints.n_spatial;
    let dets: Vec<u64> = (0u64..(1 << n))
        .filter(|d| d.count_ones() as usize == n_electrons)
        .collect();
    let index: std::collections::HashMap<u64, usize> =
        dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let dim = dets.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (col, &det) in dets.iter().enumerate() {
        h[(col, col)] += ints.core_energy;
        // one-body: a+_p a_q
        for p in 0..n {
            for q in 0..n {
                let v = spin.h(p, q);
                if v == 0.0 {
                    continue;
                }
                if let Some((s1, d1)) = annihilate(det, q) {
                    if let Some((s2, d2)) = create(d1, p) {
                        h[(index[&d2], col)] += v * s1 * s2;
                    }
                }
            }
        }
        // two-body: 1/2 <pq|rs> a+_p a+_q a_s a_r
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = spin.phys(p, q, r, s);
                        if v == 0.0 {
                            continue;
                        }
                        if let Some((s1, d1)) = annihilate(det, r) {
                            if let Some((s2, d2)) = annihilate(d1, s) {
                                if let Some((s3, d3)) = create(d2, q) {
                                    if let Some((s4, d4)) = create(d3, p) {
                                        h[(index[&d4], col)] += 0.5 * v * s1 * s2 * s3 * s4;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    h.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
