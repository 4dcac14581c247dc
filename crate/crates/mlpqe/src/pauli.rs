//! Pauli-string algebra, fermionic ladder products, and the Jordan-Wigner map.
//!
//! Qubit ordering equals the spin-orbital ordering: qubit `q` holds the
//! occupation of spin-orbital `q`, and basis index bit `q` (little-endian)
//! is that occupation. A creation operator maps as
//! `a_p^dag -> (X_p - iY_p)/2 (x) Z_{p-1} ... Z_0`.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrals::{MolecularIntegrals, SpinIntegrals, SpinOrbitalBasis};

/// Coefficients below this are dropped during simplification.
pub const SIMPLIFY_TOL: f64 = 1e-14;

/// A weighted Pauli string stored as X/Z bitmasks over `n_qubits`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliString {
    pub coefficient: Complex64,
    x_mask: u64,
    z_mask: u64,
    n_qubits: usize,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        PauliString {
            coefficient: Complex64::new(1.0, 0.0),
            x_mask: 0,
            z_mask: 0,
            n_qubits,
        }
    }

    /// Build from a letter slice, index 0 = qubit 0.
    pub fn from_letters(coefficient: Complex64, letters: &[char], n_qubits: usize) -> Result<Self> {
        assert_eq!(letters.len(), n_qubits, "letters length must equal n_qubits");
        let mut x_mask = 0u64;
        let mut z_mask = 0u64;
        for (q, &l) in letters.iter().enumerate() {
            match l {
                'I' => {}
                'X' => x_mask |= 1 << q,
                'Y' => {
                    x_mask |= 1 << q;
                    z_mask |= 1 << q;
                }
                'Z' => z_mask |= 1 << q,
                other => {
                    return Err(Error::Contract(format!("unknown Pauli letter `{other}`")));
                }
            }
        }
        Ok(PauliString {
            coefficient,
            x_mask,
            z_mask,
            n_qubits,
        })
    }

    pub fn letters(&self) -> String {
        (0..self.n_qubits)
            .map(|q| match ((self.x_mask >> q) & 1, (self.z_mask >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            })
            .collect()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    /// Operator product `self * other` (self applied after other).
    pub fn mul(&self, other: &PauliString) -> PauliString {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        let mut phase = Complex64::new(1.0, 0.0);
        let support = (self.x_mask | self.z_mask) & (other.x_mask | other.z_mask);
        let mut bits = support;
        while bits != 0 {
            let q = bits.trailing_zeros() as u64;
            bits &= bits - 1;
            let a = (((self.x_mask >> q) & 1) | (((self.z_mask >> q) & 1) << 1)) as u8;
            let b = (((other.x_mask >> q) & 1) | (((other.z_mask >> q) & 1) << 1)) as u8;
            // encoding: 0 = I, 1 = X, 2 = Z, 3 = Y; cyclic X->Y->Z->X gives +i
            phase *= match (a, b) {
                (1, 3) | (3, 2) | (2, 1) => Complex64::new(0.0, 1.0),
                (3, 1) | (2, 3) | (1, 2) => Complex64::new(0.0, -1.0),
                _ => Complex64::new(1.0, 0.0),
            };
        }
        PauliString {
            coefficient: self.coefficient * other.coefficient * phase,
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
            n_qubits: self.n_qubits,
        }
    }

    pub fn adjoint(&self) -> PauliString {
        PauliString {
            coefficient: self.coefficient.conj(),
            ..*self
        }
    }
}

/// A simplified sum of Pauli strings over a common qubit count.
///
/// Duplicate letter patterns are merged and near-zero coefficients dropped;
/// terms are kept in a deterministic (mask-sorted) order.
#[derive(Debug, Clone)]
pub struct PauliSum {
    terms: Vec<PauliString>,
    n_qubits: usize,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            terms: Vec::new(),
            n_qubits,
        }
    }

    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = PauliString>) -> Self {
        let mut map: HashMap<(u64, u64), Complex64> = HashMap::new();
        for t in terms {
            debug_assert_eq!(t.n_qubits, n_qubits);
            *map.entry((t.x_mask, t.z_mask))
                .or_insert(Complex64::new(0.0, 0.0)) += t.coefficient;
        }
        let mut terms: Vec<PauliString> = map
            .into_iter()
            .filter(|(_, c)| c.norm() >= SIMPLIFY_TOL)
            .map(|((x, z), c)| PauliString {
                coefficient: c,
                x_mask: x,
                z_mask: z,
                n_qubits,
            })
            .collect();
        terms.sort_by_key(|t| (t.x_mask, t.z_mask));
        PauliSum { terms, n_qubits }
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the identity term, if present.
    pub fn identity_coefficient(&self) -> Complex64 {
        self.terms
            .iter()
            .find(|t| t.is_identity())
            .map(|t| t.coefficient)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        // a Pauli string with an odd number of Y letters is imaginary as a
        // matrix times the real pattern; hermiticity of the simplified sum
        // reduces to each coefficient being real
        self.terms.iter().all(|t| t.coefficient.im.abs() <= tol)
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|t| t.coefficient.re.abs() <= tol)
    }

    /// All pairs of terms commute as operators.
    pub fn terms_mutually_commute(&self) -> bool {
        self.terms.iter().enumerate().all(|(i, a)| {
            self.terms[i + 1..].iter().all(|b| {
                // symplectic criterion: commute iff <a.x, b.z> + <a.z, b.x> even
                let s = (a.x_mask & b.z_mask).count_ones() + (a.z_mask & b.x_mask).count_ones();
                s % 2 == 0
            })
        })
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum::from_terms(self.n_qubits, self.terms.iter().map(|t| t.adjoint()))
    }

    pub fn scaled(&self, factor: Complex64) -> PauliSum {
        PauliSum::from_terms(
            self.n_qubits,
            self.terms.iter().map(|t| PauliString {
                coefficient: t.coefficient * factor,
                ..*t
            }),
        )
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        PauliSum::from_terms(
            self.n_qubits,
            self.terms.iter().chain(other.terms.iter()).copied(),
        )
    }

    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.mul(b));
            }
        }
        PauliSum::from_terms(self.n_qubits, out)
    }

    /// Debug dump, one `coeff letters` line per term.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for t in &self.terms {
            s.push_str(&format!(
                "{:+.12e}{:+.12e}i {}\n",
                t.coefficient.re,
                t.coefficient.im,
                t.letters()
            ));
        }
        s
    }
}

/// Sum of absolute coefficients, identity excluded (it needs no measurement).
pub fn one_norm(h: &PauliSum) -> f64 {
    h.terms()
        .iter()
        .filter(|t| !t.is_identity())
        .map(|t| t.coefficient.norm())
        .sum()
}

/// A single fermionic ladder operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

impl Ladder {
    pub fn index(&self) -> usize {
        match self {
            Ladder::Create(p) | Ladder::Annihilate(p) => *p,
        }
    }
}

/// Raw sum of ladder-operator products (no normal ordering applied).
#[derive(Debug, Clone, Default)]
pub struct FermionOperator {
    pub products: Vec<(Complex64, Vec<Ladder>)>,
}

impl FermionOperator {
    pub fn single(coefficient: Complex64, ops: Vec<Ladder>) -> Self {
        FermionOperator {
            products: vec![(coefficient, ops)],
        }
    }

    /// The particle-hole excitation `tau = a+_{v1} a+_{v2} ... a_{o_k} ... a_{o_1}`
    /// for sorted occupied and virtual index lists.
    pub fn tau(occ: &[usize], virt: &[usize]) -> Self {
        let mut ops: Vec<Ladder> = virt.iter().map(|&a| Ladder::Create(a)).collect();
        ops.extend(occ.iter().rev().map(|&i| Ladder::Annihilate(i)));
        FermionOperator::single(Complex64::new(1.0, 0.0), ops)
    }

    /// Anti-Hermitian generator `kappa = tau - tau^dag`.
    pub fn kappa(occ: &[usize], virt: &[usize]) -> Self {
        let tau = Self::tau(occ, virt);
        let mut out = tau.clone();
        let (c, ops) = &tau.products[0];
        let adj: Vec<Ladder> = ops
            .iter()
            .rev()
            .map(|l| match l {
                Ladder::Create(p) => Ladder::Annihilate(*p),
                Ladder::Annihilate(p) => Ladder::Create(*p),
            })
            .collect();
        out.products.push((-c.conj(), adj));
        out
    }
}

fn jw_ladder(op: Ladder, n_spin: usize) -> [PauliString; 2] {
    let p = op.index();
    let chain = (1u64 << p) - 1; // Z on qubits below p
    let half = Complex64::new(0.5, 0.0);
    let y_coeff = match op {
        // a+ -> (X - iY)/2, a -> (X + iY)/2
        Ladder::Create(_) => Complex64::new(0.0, -0.5),
        Ladder::Annihilate(_) => Complex64::new(0.0, 0.5),
    };
    let x_term = PauliString {
        coefficient: half,
        x_mask: 1 << p,
        z_mask: chain,
        n_qubits: n_spin,
    };
    let y_term = PauliString {
        coefficient: y_coeff,
        x_mask: 1 << p,
        z_mask: chain | (1 << p),
        n_qubits: n_spin,
    };
    [x_term, y_term]
}

/// Jordan-Wigner image of a fermionic operator.
pub fn jordan_wigner(op: &FermionOperator, n_spin: usize) -> PauliSum {
    let mut map: HashMap<(u64, u64), Complex64> = HashMap::new();
    for (coefficient, ladder) in &op.products {
        jordan_wigner_product(*coefficient, ladder, n_spin, &mut map);
    }
    collect_map(map, n_spin)
}

fn jordan_wigner_product(
    coefficient: Complex64,
    ladder: &[Ladder],
    n_spin: usize,
    out: &mut HashMap<(u64, u64), Complex64>,
) {
    let mut acc = vec![PauliString {
        coefficient,
        x_mask: 0,
        z_mask: 0,
        n_qubits: n_spin,
    }];
    for &op in ladder {
        debug_assert!(op.index() < n_spin, "ladder index exceeds n_spin");
        let factors = jw_ladder(op, n_spin);
        let mut next = Vec::with_capacity(acc.len() * 2);
        for a in &acc {
            for f in &factors {
                next.push(a.mul(f));
            }
        }
        acc = next;
    }
    for t in acc {
        *out.entry((t.x_mask, t.z_mask))
            .or_insert(Complex64::new(0.0, 0.0)) += t.coefficient;
    }
}

fn collect_map(map: HashMap<(u64, u64), Complex64>, n_qubits: usize) -> PauliSum {
    PauliSum::from_terms(
        n_qubits,
        map.into_iter().map(|((x, z), c)| PauliString {
            coefficient: c,
            x_mask: x,
            z_mask: z,
            n_qubits,
        }),
    )
}

/// JW image of an excitation generator `kappa = tau - tau^dag`.
///
/// The result is anti-Hermitian with exactly `2^(2k-1)` mutually commuting
/// terms for a rank-k particle-hole excitation; anything else is rejected.
pub fn excitation_image(kappa: &FermionOperator, n_spin: usize) -> Result<PauliSum> {
    let image = jordan_wigner(kappa, n_spin);
    if !image.is_anti_hermitian(1e-12) {
        return Err(Error::Contract(
            "excitation image is not anti-Hermitian; input is not tau - tau^dag for a particle-hole excitation".into(),
        ));
    }
    let rank = kappa
        .products
        .first()
        .map(|(_, ops)| ops.len() / 2)
        .unwrap_or(0);
    let expected = 1usize << (2 * rank - 1);
    if image.len() != expected {
        return Err(Error::Contract(format!(
            "excitation image has {} terms, expected {} for rank {}",
            image.len(),
            expected,
            rank
        )));
    }
    if !image.terms_mutually_commute() {
        return Err(Error::Contract(
            "excitation image terms do not mutually commute".into(),
        ));
    }
    Ok(image)
}

/// Qubit Hamiltonian
/// `H = E_core I + sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r`
/// mapped through Jordan-Wigner. All coefficients come out real; residual
/// imaginary parts below 1e-12 are discarded.
pub fn hamiltonian_from_integrals(
    ints: &MolecularIntegrals,
    basis: &SpinOrbitalBasis,
) -> PauliSum {
    let spin_ints = SpinIntegrals::new(ints);
    let n = basis.n_spin;
    let mut map: HashMap<(u64, u64), Complex64> = HashMap::new();

    map.insert((0, 0), Complex64::new(ints.core_energy, 0.0));

    for p in 0..n {
        for q in 0..n {
            let h = spin_ints.h(p, q);
            if h.abs() < SIMPLIFY_TOL {
                continue;
            }
            jordan_wigner_product(
                Complex64::new(h, 0.0),
                &[Ladder::Create(p), Ladder::Annihilate(q)],
                n,
                &mut map,
            );
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = spin_ints.phys(p, q, r, s);
                    if v.abs() < SIMPLIFY_TOL {
                        continue;
                    }
                    jordan_wigner_product(
                        Complex64::new(0.5 * v, 0.0),
                        &[
                            Ladder::Create(p),
                            Ladder::Create(q),
                            Ladder::Annihilate(s),
                            Ladder::Annihilate(r),
                        ],
                        n,
                        &mut map,
                    );
                }
            }
        }
    }

    let sum = collect_map(map, n);
    debug_assert!(sum.is_hermitian(1e-12));
    // strip the sub-threshold imaginary dust left by the complex arithmetic
    PauliSum::from_terms(
        n,
        sum.terms().iter().map(|t| PauliString {
            coefficient: Complex64::new(t.coefficient.re, 0.0),
            ..*t
        }),
    )
}
