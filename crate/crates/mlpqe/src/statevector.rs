//! Dense 2^n-amplitude statevector backend.
//!
//! Basis index bit `q` (little-endian) is the occupation of spin-orbital /
//! qubit `q`. Pauli strings are applied with stride arithmetic over the
//! amplitude array, never through explicit matrices.

use num_complex::Complex64;

use crate::ansatz::AnsatzPool;
use crate::error::{Error, Result};
use crate::pauli::{Ladder, PauliString, PauliSum};

/// Occupation bitmask over spin-orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Determinant(pub u64);

impl Determinant {
    pub fn particle_count(&self) -> u32 {
        self.0.count_ones()
    }

    /// Basis index of this determinant under the frozen ordering.
    pub fn index(&self) -> usize {
        self.0 as usize
    }
}

/// Apply a ladder-operator string to a determinant, rightmost operator first.
///
/// Returns the fermionic sign and the resulting determinant, or `None` when
/// the string annihilates the state. The sign per operator is
/// `(-1)^(occupied below p)`, matching the Jordan-Wigner Z-chain.
pub fn apply_ladder(det: Determinant, ops: &[Ladder]) -> Option<(i32, Determinant)> {
    let mut mask = det.0;
    let mut sign = 1i32;
    for op in ops.iter().rev() {
        let p = op.index();
        let bit = 1u64 << p;
        match op {
            Ladder::Annihilate(_) => {
                if mask & bit == 0 {
                    return None;
                }
                if (mask & (bit - 1)).count_ones() % 2 == 1 {
                    sign = -sign;
                }
                mask &= !bit;
            }
            Ladder::Create(_) => {
                if mask & bit != 0 {
                    return None;
                }
                if (mask & (bit - 1)).count_ones() % 2 == 1 {
                    sign = -sign;
                }
                mask |= bit;
            }
        }
    }
    Some((sign, Determinant(mask)))
}

/// Dense complex amplitude vector over 2^n basis states.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    n_qubits: usize,
}

/// Phase of a Pauli string on basis state `b`: `i^(#Y) * (-1)^|b & z|`.
#[inline]
fn pauli_phase(term: &PauliString, b: usize) -> Complex64 {
    let n_y = (term.x_mask() & term.z_mask()).count_ones();
    let sign = if ((b as u64) & term.z_mask()).count_ones() % 2 == 1 {
        -1.0
    } else {
        1.0
    };
    match n_y % 4 {
        0 => Complex64::new(sign, 0.0),
        1 => Complex64::new(0.0, sign),
        2 => Complex64::new(-sign, 0.0),
        _ => Complex64::new(0.0, -sign),
    }
}

impl StateVector {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, det: Determinant) -> Complex64 {
        self.amplitudes[det.index()]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Apply one weighted Pauli string: `psi <- c P psi`.
    pub fn apply_pauli_string(&mut self, term: &PauliString) {
        let x = term.x_mask() as usize;
        let c = term.coefficient;
        if x == 0 {
            for (b, a) in self.amplitudes.iter_mut().enumerate() {
                *a *= c * pauli_phase(term, b);
            }
            return;
        }
        let pivot = 1usize << x.trailing_zeros();
        let dim = self.amplitudes.len();
        for b in 0..dim {
            if b & pivot != 0 {
                continue;
            }
            let j = b ^ x;
            // P|b> = phase(b)|j>, P|j> = phase(j)|b>
            let pb = pauli_phase(term, b);
            let pj = pauli_phase(term, j);
            let ab = self.amplitudes[b];
            let aj = self.amplitudes[j];
            self.amplitudes[b] = c * pj * aj;
            self.amplitudes[j] = c * pb * ab;
        }
    }

    /// `psi <- exp(theta * kappa) psi` as an ordered product of single-string
    /// rotations; exact because the image's terms mutually commute.
    pub fn apply_excitation_exp(&mut self, kappa_image: &PauliSum, theta: f64) -> Result<()> {
        if !kappa_image.is_anti_hermitian(1e-12) {
            return Err(Error::Contract(
                "apply_excitation_exp requires an anti-Hermitian generator".into(),
            ));
        }
        if !kappa_image.terms_mutually_commute() {
            return Err(Error::Contract(
                "apply_excitation_exp requires mutually commuting terms".into(),
            ));
        }
        if theta == 0.0 {
            return Ok(());
        }
        #[cfg(debug_assertions)]
        let norm_in = self.norm();
        for term in kappa_image.terms() {
            // term = i*a*P with a real; exp(theta*i*a*P) = cos(a t) I + i sin(a t) P
            let a = term.coefficient.im;
            let (sin, cos) = (a * theta).sin_cos();
            let isin = Complex64::new(0.0, sin);
            let x = term.x_mask() as usize;
            debug_assert!(x != 0, "excitation strings always flip bits");
            let pivot = 1usize << x.trailing_zeros();
            let dim = self.amplitudes.len();
            for b in 0..dim {
                if b & pivot != 0 {
                    continue;
                }
                let j = b ^ x;
                let pb = pauli_phase(term, b);
                let pj = pauli_phase(term, j);
                let ab = self.amplitudes[b];
                let aj = self.amplitudes[j];
                self.amplitudes[b] = cos * ab + isin * pj * aj;
                self.amplitudes[j] = cos * aj + isin * pb * ab;
            }
        }
        // unitary: norm preserved (the input need not be normalized)
        #[cfg(debug_assertions)]
        debug_assert!((self.norm() - norm_in).abs() < 1e-10 * norm_in.max(1.0));
        Ok(())
    }

    /// Apply the full ansatz; the first pool operator acts first.
    pub fn apply_ansatz(&mut self, pool: &AnsatzPool) -> Result<()> {
        for (op, &theta) in pool.operators.iter().zip(&pool.theta) {
            self.apply_excitation_exp(&op.kappa_image, theta)?;
        }
        Ok(())
    }

    /// Inverse ansatz: adjoint factors in reverse order.
    pub fn apply_ansatz_inverse(&mut self, pool: &AnsatzPool) -> Result<()> {
        for (op, &theta) in pool.operators.iter().zip(&pool.theta).rev() {
            self.apply_excitation_exp(&op.kappa_image, -theta)?;
        }
        Ok(())
    }
}

/// One-hot state for a determinant.
pub fn basis_state(det: Determinant, n_qubits: usize) -> StateVector {
    let dim = 1usize << n_qubits;
    assert!(det.index() < dim, "determinant out of range");
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    amplitudes[det.index()] = Complex64::new(1.0, 0.0);
    StateVector {
        amplitudes,
        n_qubits,
    }
}

/// `<psi|h|psi>` for a Hermitian Pauli sum.
pub fn expectation(h: &PauliSum, psi: &StateVector) -> Result<f64> {
    if !h.is_hermitian(1e-12) {
        return Err(Error::Contract("expectation requires a Hermitian operator".into()));
    }
    let mut value = Complex64::new(0.0, 0.0);
    let amps = &psi.amplitudes;
    for term in h.terms() {
        let x = term.x_mask() as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        if x == 0 {
            for (b, a) in amps.iter().enumerate() {
                // diagonal string: phase is real
                acc += pauli_phase(term, b) * a.norm_sqr();
            }
        } else {
            for (b, a) in amps.iter().enumerate() {
                let j = b ^ x;
                acc += amps[j].conj() * pauli_phase(term, b) * a;
            }
        }
        value += term.coefficient * acc;
    }
    debug_assert!(
        value.im.abs() < 1e-10,
        "imaginary expectation residue {}",
        value.im
    );
    Ok(value.re)
}

/// Apply a full Pauli sum: returns `h|psi>` (not normalized).
pub fn apply_pauli_sum(h: &PauliSum, psi: &StateVector) -> StateVector {
    let dim = psi.amplitudes.len();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for term in h.terms() {
        let x = term.x_mask() as usize;
        let c = term.coefficient;
        for (b, a) in psi.amplitudes.iter().enumerate() {
            out[b ^ x] += c * pauli_phase(term, b) * a;
        }
    }
    StateVector {
        amplitudes: out,
        n_qubits: psi.n_qubits,
    }
}

/// Lowest eigenvalue of `h` restricted to the particle-number sector with
/// `popcount = n_electrons`; the FCI oracle for error metrics.
pub fn exact_ground_energy(h: &PauliSum, n_electrons: usize) -> Result<f64> {
    let n = h.n_qubits();
    assert!(n <= 16, "exact diagonalization limited to 16 qubits");
    let dim = 1usize << n;
    let sector: Vec<usize> = (0..dim)
        .filter(|b| (*b as u64).count_ones() as usize == n_electrons)
        .collect();
    if sector.is_empty() {
        return Err(Error::EmptySector {
            n_electrons,
            n_qubits: n,
        });
    }
    let mut position = vec![usize::MAX; dim];
    for (i, &b) in sector.iter().enumerate() {
        position[b] = i;
    }
    let m = sector.len();
    let mut matrix = nalgebra::DMatrix::<Complex64>::zeros(m, m);
    for term in h.terms() {
        let x = term.x_mask() as usize;
        for (col, &b) in sector.iter().enumerate() {
            let j = b ^ x;
            let row = position[j];
            if row == usize::MAX {
                continue;
            }
            // <j| term |b>
            matrix[(row, col)] += term.coefficient * pauli_phase(term, b);
        }
    }
    let eigen = nalgebra::SymmetricEigen::new(matrix);
    Ok(eigen
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &e| acc.min(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::generate_pool;
    use crate::integrals;
    use crate::pauli::{hamiltonian_from_integrals, FermionOperator, PauliSum, PauliString};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn letters(coeff: Complex64, s: &str) -> PauliString {
        let chars: Vec<char> = s.chars().collect();
        PauliString::from_letters(coeff, &chars, chars.len()).unwrap()
    }

    #[test]
    fn basis_state_empty_mask() {
        let psi = basis_state(Determinant(0), 3);
        assert_eq!(psi.amplitude(Determinant(0)), c(1.0, 0.0));
        assert_relative_eq!(psi.norm(), 1.0);
    }

    #[test]
    fn basis_state_occupied_bits() {
        let psi = basis_state(Determinant(0b11), 4);
        assert_eq!(psi.amplitude(Determinant(0b11)), c(1.0, 0.0));
        assert_eq!(psi.amplitude(Determinant(0)), c(0.0, 0.0));
        assert_relative_eq!(psi.norm(), 1.0);
    }

    #[test]
    fn z_and_x_expectations_on_vacuum() {
        let psi = basis_state(Determinant(0), 1);
        let z = PauliSum::from_terms(1, [letters(c(1.0, 0.0), "Z")]);
        let x = PauliSum::from_terms(1, [letters(c(1.0, 0.0), "X")]);
        assert_relative_eq!(expectation(&z, &psi).unwrap(), 1.0);
        assert_relative_eq!(expectation(&x, &psi).unwrap(), 0.0);
    }

    #[test]
    fn non_hermitian_expectation_rejected() {
        let psi = basis_state(Determinant(0), 1);
        let h = PauliSum::from_terms(1, [letters(c(0.0, 1.0), "Z")]);
        assert!(expectation(&h, &psi).is_err());
    }

    #[test]
    fn zero_theta_is_identity_bit_exact() {
        let basis = integrals_basis("h2_0.7414");
        let pool = generate_pool(&basis.1, 2).unwrap();
        let mut psi = basis_state(Determinant(0b0011), 4);
        let reference = psi.clone();
        psi.apply_ansatz(&pool).unwrap();
        assert_eq!(psi.amplitudes(), reference.amplitudes());
    }

    #[test]
    fn single_excitation_two_level_rotation() {
        let kappa = FermionOperator::kappa(&[0], &[2]);
        let image = crate::pauli::excitation_image(&kappa, 4).unwrap();
        let phi0 = Determinant(0b0011);
        let theta = 0.37;
        let mut psi = basis_state(phi0, 4);
        psi.apply_excitation_exp(&image, theta).unwrap();
        // kappa|Phi0> = |Phi_mu> with mu = occupation {1,2}
        let (sign, det_mu) = apply_ladder(
            phi0,
            &[Ladder::Create(2), Ladder::Annihilate(0)],
        )
        .unwrap();
        assert_relative_eq!(psi.amplitude(phi0).re, theta.cos(), epsilon = 1e-12);
        assert_relative_eq!(
            psi.amplitude(det_mu).re,
            sign as f64 * theta.sin(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn unitarity_forward_backward() {
        let basis = integrals_basis("h4_0.75");
        let pool = generate_pool(&basis.1, 2).unwrap();
        let mut psi = basis_state(Determinant(0b0000_1111), 8);
        for op in &pool.operators {
            psi.apply_excitation_exp(&op.kappa_image, 0.21).unwrap();
        }
        for op in pool.operators.iter().rev() {
            psi.apply_excitation_exp(&op.kappa_image, -0.21).unwrap();
        }
        let reference = basis_state(Determinant(0b0000_1111), 8);
        let diff: f64 = psi
            .amplitudes()
            .iter()
            .zip(reference.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .sum();
        assert!(diff < 1e-12, "diff = {diff}");
    }

    fn integrals_basis(
        name: &str,
    ) -> (integrals::MolecularIntegrals, integrals::SpinOrbitalBasis) {
        let text = std::fs::read_to_string(format!(
            "{}/fixtures/{name}.fcidump",
            env!("CARGO_MANIFEST_DIR")
        ))
        .unwrap();
        let ints = integrals::parse_fcidump(&text).unwrap();
        let basis = integrals::orbital_energies(&ints).unwrap();
        (ints, basis)
    }

    #[test]
    fn hf_expectation_matches_integrals_on_fixtures() {
        for name in ["h2_0.7414", "h4_0.75", "h4_1.5"] {
            let (ints, basis) = integrals_basis(name);
            let h = hamiltonian_from_integrals(&ints, &basis);
            let phi0 = Determinant((1u64 << ints.n_electrons) - 1);
            let psi = basis_state(phi0, basis.n_spin);
            let e = expectation(&h, &psi).unwrap();
            assert_relative_eq!(e, integrals::hf_energy(&ints), epsilon = 1e-10);
        }
    }

    #[test]
    fn diagonal_operator_sector_eigenvalues() {
        // h = -Z_0: |1> sector (popcount 1) has eigenvalue +1, |0> sector -1
        let h = PauliSum::from_terms(1, [letters(c(-1.0, 0.0), "Z")]);
        assert_relative_eq!(exact_ground_energy(&h, 1).unwrap(), 1.0);
        assert_relative_eq!(exact_ground_energy(&h, 0).unwrap(), -1.0);
    }

    #[test]
    fn empty_sector_is_an_error() {
        let h = PauliSum::from_terms(1, [letters(c(1.0, 0.0), "Z")]);
        assert!(exact_ground_energy(&h, 2).is_err());
    }

    fn dense_matrix(sum: &PauliSum) -> nalgebra::DMatrix<Complex64> {
        let dim = 1usize << sum.n_qubits();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for term in sum.terms() {
            let x = term.x_mask() as usize;
            for b in 0..dim {
                m[(b ^ x, b)] += term.coefficient * pauli_phase(term, b);
            }
        }
        m
    }

    #[test]
    fn rotation_product_equals_dense_exponential_h4() {
        use rand::{Rng, SeedableRng};
        let (_, basis) = integrals_basis("h4_0.75");
        let pool = generate_pool(&basis, 4).unwrap();
        let dim = 1usize << basis.n_spin;

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let raw: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let mut random_state = basis_state(Determinant(0), basis.n_spin);
        random_state.amplitudes = raw.iter().map(|a| a / norm).collect();

        let theta = 0.31;
        for op in &pool.operators {
            // oracle: Taylor series of the dense exp(theta K) applied to the state
            let k = dense_matrix(&op.kappa_image);
            let input = nalgebra::DVector::from_column_slice(random_state.amplitudes());
            let mut expected = input.clone();
            let mut power = input;
            for order in 1..60 {
                power = (&k * power) * Complex64::new(theta / order as f64, 0.0);
                expected += &power;
            }

            let mut rotated = random_state.clone();
            rotated.apply_excitation_exp(&op.kappa_image, theta).unwrap();
            let diff: f64 = rotated
                .amplitudes()
                .iter()
                .zip(expected.iter())
                .map(|(a, b)| (a - b).norm())
                .sum();
            assert!(diff < 1e-12, "{}: diff = {diff}", op.label);
        }
    }
}
