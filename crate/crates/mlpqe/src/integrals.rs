//! FCIDUMP ingestion and derived spin-orbital quantities.
//!
//! The FCIDUMP file (Knowles-Handy convention) carries spatial-orbital
//! integrals in chemists' notation `(pq|rs)` with 1-based indices. Everything
//! downstream works in a spin-orbital basis with the interleaved ordering
//! frozen here: spatial orbital `p` maps to spin-orbitals `2p` (alpha) and
//! `2p + 1` (beta). Physicists'-notation antisymmetrized integrals are
//! expanded once and cached in [`SpinIntegrals`].

use std::collections::HashMap;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const DENOMINATOR_TOL: f64 = 1e-8;

/// Spatial-orbital integrals plus core (nuclear-repulsion) energy.
#[derive(Debug, Clone)]
pub struct MolecularIntegrals {
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    pub core_energy: f64,
    one_body: Vec<f64>,
    two_body: Vec<f64>,
    /// Optional per-orbital energies found as `(i,0,0,0)` records.
    file_orbital_energies: Option<Vec<f64>>,
}

impl MolecularIntegrals {
    /// One-electron integral h_pq, 0-based spatial indices.
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.n_spatial + q]
    }

    /// Two-electron integral (pq|rs) in chemists' notation, 0-based spatial indices.
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.two_body[((p * n + q) * n + r) * n + s]
    }

    pub fn n_occupied_spatial(&self) -> usize {
        self.n_electrons / 2
    }

    fn validate(&self) -> Result<()> {
        if self.n_electrons % 2 != 0 {
            return Err(Error::Invalid(format!(
                "NELEC = {} is odd; a closed-shell restricted reference is required",
                self.n_electrons
            )));
        }
        let n = self.n_spatial;
        for p in 0..n {
            for q in 0..n {
                if (self.h(p, q) - self.h(q, p)).abs() > SYMMETRY_TOL {
                    return Err(Error::Invalid(format!(
                        "one-body integrals not symmetric at ({p},{q})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Spin-orbital basis data: occupancy of the reference determinant and
/// canonical orbital energies.
#[derive(Debug, Clone)]
pub struct SpinOrbitalBasis {
    pub n_spin: usize,
    /// Sorted spin-orbitals occupied in the Hartree-Fock reference.
    pub occupied: Vec<usize>,
    /// Canonical orbital energy per spin-orbital, Hartree.
    pub epsilon: Vec<f64>,
}

impl SpinOrbitalBasis {
    pub fn is_occupied(&self, p: usize) -> bool {
        self.occupied.binary_search(&p).is_ok()
    }

    /// Spatial orbital underlying spin-orbital `p` (interleaved ordering).
    pub fn spatial(p: usize) -> usize {
        p / 2
    }

    /// Spin of spin-orbital `p`: 0 = alpha, 1 = beta.
    pub fn spin(p: usize) -> usize {
        p % 2
    }

    pub fn virtuals(&self) -> Vec<usize> {
        (0..self.n_spin).filter(|p| !self.is_occupied(*p)).collect()
    }
}

/// Parse an FCIDUMP character stream.
///
/// Records with four nonzero indices populate the two-body tensor (expanded
/// over the 8-fold permutational symmetry), `(i,j,0,0)` records the one-body
/// matrix, `(i,0,0,0)` records are kept aside as optional orbital energies,
/// and the `(0,0,0,0)` record is the core energy.
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    let mut lines = text.lines().enumerate();

    // Header: everything from &FCI up to &END (or a bare "/").
    let mut header = String::new();
    let mut header_done = false;
    let mut body_start = 0;
    for (idx, line) in lines.by_ref() {
        let upper = line.to_uppercase();
        header.push(' ');
        header.push_str(&upper);
        if upper.contains("&END") || upper.trim() == "/" || upper.ends_with('/') {
            header_done = true;
            body_start = idx + 1;
            break;
        }
    }
    if !header_done {
        return Err(Error::Parse {
            line: 1,
            message: "header not terminated by &END".into(),
        });
    }
    if !header.contains("&FCI") {
        return Err(Error::Parse {
            line: 1,
            message: "missing &FCI namelist marker".into(),
        });
    }

    let n_spatial = header_field(&header, "NORB")? as usize;
    let n_electrons = header_field(&header, "NELEC")? as usize;
    let ms2 = header_field(&header, "MS2")? as i32;
    if n_spatial == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "NORB must be positive".into(),
        });
    }

    let n = n_spatial;
    let mut one_body = vec![0.0; n * n];
    let mut two_body = vec![0.0; n * n * n * n];
    let mut core_energy = None;
    let mut file_eps: HashMap<usize, f64> = HashMap::new();

    let text_lines: Vec<&str> = text.lines().collect();
    for (idx, raw) in text_lines.iter().enumerate().skip(body_start) {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `value i j k l`, got {} token(s)", tokens.len()),
            });
        }
        let value: f64 = tokens[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("malformed value `{}`", tokens[0]),
        })?;
        let mut idx4 = [0usize; 4];
        for (slot, tok) in idx4.iter_mut().zip(&tokens[1..]) {
            *slot = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("malformed index `{tok}`"),
            })?;
        }
        let [i, j, k, l] = idx4;
        for (name, v) in [("i", i), ("j", j), ("k", k), ("l", l)] {
            if v > n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("index {name} = {v} out of range 1..={n}"),
                });
            }
        }
        match (i, j, k, l) {
            (0, 0, 0, 0) => core_energy = Some(value),
            (i, 0, 0, 0) => {
                file_eps.insert(i - 1, value);
            }
            (i, j, 0, 0) => {
                one_body[(i - 1) * n + (j - 1)] = value;
                one_body[(j - 1) * n + (i - 1)] = value;
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (p, q, r, s) = (i - 1, j - 1, k - 1, l - 1);
                for (a, b, c, d) in [
                    (p, q, r, s),
                    (q, p, r, s),
                    (p, q, s, r),
                    (q, p, s, r),
                    (r, s, p, q),
                    (s, r, p, q),
                    (r, s, q, p),
                    (s, r, q, p),
                ] {
                    two_body[((a * n + b) * n + c) * n + d] = value;
                }
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unsupported index pattern ({i},{j},{k},{l})"),
                });
            }
        }
    }

    let core_energy = core_energy.ok_or(Error::Parse {
        line: text_lines.len(),
        message: "missing core-energy record (0 0 0 0)".into(),
    })?;

    let file_orbital_energies = if file_eps.is_empty() {
        None
    } else {
        let mut eps = vec![0.0; n];
        for (i, v) in file_eps {
            eps[i] = v;
        }
        Some(eps)
    };

    let ints = MolecularIntegrals {
        n_spatial,
        n_electrons,
        ms2,
        core_energy,
        one_body,
        two_body,
        file_orbital_energies,
    };
    ints.validate()?;
    Ok(ints)
}

fn header_field(header: &str, key: &str) -> Result<i64> {
    let pos = header.find(key).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("header field {key} missing"),
    })?;
    let rest = &header[pos + key.len()..];
    let rest = rest.trim_start().trim_start_matches('=').trim_start();
    let num: String = rest
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
        .collect();
    num.parse().map_err(|_| Error::Parse {
        line: 1,
        message: format!("header field {key} has no numeric value"),
    })
}

/// Canonical orbital energies and reference occupancy.
///
/// eps_p = h_pp + sum over occupied spatial i of `2(pp|ii) - (pi|ip)`;
/// occupied spin-orbitals are the lowest `n_electrons` in the file ordering.
/// If the file carries `(i,0,0,0)` records they are cross-checked.
pub fn orbital_energies(ints: &MolecularIntegrals) -> Result<SpinOrbitalBasis> {
    let n = ints.n_spatial;
    let nocc = ints.n_occupied_spatial();
    let mut eps_spatial = vec![0.0; n];
    for p in 0..n {
        let mut e = ints.h(p, p);
        for i in 0..nocc {
            e += 2.0 * ints.eri(p, p, i, i) - ints.eri(p, i, i, p);
        }
        eps_spatial[p] = e;
    }

    if let Some(file_eps) = &ints.file_orbital_energies {
        for (i, (&file_value, &computed)) in file_eps.iter().zip(&eps_spatial).enumerate() {
            if (file_value - computed).abs() > 1e-8 {
                return Err(Error::OrbitalEnergyMismatch {
                    index: i,
                    file_value,
                    computed,
                });
            }
        }
    }

    let n_spin = 2 * n;
    let mut epsilon = vec![0.0; n_spin];
    for p in 0..n {
        epsilon[2 * p] = eps_spatial[p];
        epsilon[2 * p + 1] = eps_spatial[p];
    }
    Ok(SpinOrbitalBasis {
        n_spin,
        occupied: (0..ints.n_electrons).collect(),
        epsilon,
    })
}

/// Restricted Hartree-Fock energy of the reference determinant.
pub fn hf_energy(ints: &MolecularIntegrals) -> f64 {
    let nocc = ints.n_occupied_spatial();
    let mut e = ints.core_energy;
    for i in 0..nocc {
        e += 2.0 * ints.h(i, i);
        for j in 0..nocc {
            e += 2.0 * ints.eri(i, i, j, j) - ints.eri(i, j, j, i);
        }
    }
    e
}

/// Cached spin-orbital integrals in physicists' convention.
///
/// The chemists'-to-physicists' conversion happens once here:
/// `<pq|rs> = (PR|QS) delta(sigma_p, sigma_r) delta(sigma_q, sigma_s)` with
/// capital letters denoting the underlying spatial orbitals.
#[derive(Debug, Clone)]
pub struct SpinIntegrals {
    pub n_spin: usize,
    one_body: Vec<f64>,
    phys: Vec<f64>,
}

impl SpinIntegrals {
    pub fn new(ints: &MolecularIntegrals) -> Self {
        let n_spin = 2 * ints.n_spatial;
        let mut one_body = vec![0.0; n_spin * n_spin];
        for p in 0..n_spin {
            for q in 0..n_spin {
                if SpinOrbitalBasis::spin(p) == SpinOrbitalBasis::spin(q) {
                    one_body[p * n_spin + q] =
                        ints.h(SpinOrbitalBasis::spatial(p), SpinOrbitalBasis::spatial(q));
                }
            }
        }
        let mut phys = vec![0.0; n_spin * n_spin * n_spin * n_spin];
        for p in 0..n_spin {
            for q in 0..n_spin {
                for r in 0..n_spin {
                    for s in 0..n_spin {
                        if SpinOrbitalBasis::spin(p) == SpinOrbitalBasis::spin(r)
                            && SpinOrbitalBasis::spin(q) == SpinOrbitalBasis::spin(s)
                        {
                            phys[((p * n_spin + q) * n_spin + r) * n_spin + s] = ints.eri(
                                SpinOrbitalBasis::spatial(p),
                                SpinOrbitalBasis::spatial(r),
                                SpinOrbitalBasis::spatial(q),
                                SpinOrbitalBasis::spatial(s),
                            );
                        }
                    }
                }
            }
        }
        SpinIntegrals {
            n_spin,
            one_body,
            phys,
        }
    }

    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.n_spin + q]
    }

    /// Physicists' `<pq|rs>`.
    pub fn phys(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.phys[((p * self.n_spin + q) * self.n_spin + r) * self.n_spin + s]
    }

    /// Antisymmetrized `<pq||rs> = <pq|rs> - <pq|sr>`.
    pub fn antisym(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.phys(p, q, r, s) - self.phys(p, q, s, r)
    }
}

/// Key for a double excitation: sorted occupied pair, sorted virtual pair.
pub type DoubleKey = ([usize; 2], [usize; 2]);

/// Spin-orbital MP2 amplitudes `t_ij^ab = <ab||ij> / (e_i + e_j - e_a - e_b)`
/// for all spin-conserving doubles. Singles vanish at MP2 for canonical RHF.
pub fn mp2_amplitudes(
    basis: &SpinOrbitalBasis,
    ints: &MolecularIntegrals,
) -> Result<HashMap<DoubleKey, f64>> {
    let spin_ints = SpinIntegrals::new(ints);
    mp2_amplitudes_cached(basis, &spin_ints)
}

/// As [`mp2_amplitudes`] but reusing an already-expanded [`SpinIntegrals`].
pub fn mp2_amplitudes_cached(
    basis: &SpinOrbitalBasis,
    spin_ints: &SpinIntegrals,
) -> Result<HashMap<DoubleKey, f64>> {
    let occ = &basis.occupied;
    let virt = basis.virtuals();
    let mut t2 = HashMap::new();
    for (ii, &i) in occ.iter().enumerate() {
        for &j in &occ[ii + 1..] {
            for (ai, &a) in virt.iter().enumerate() {
                for &b in &virt[ai + 1..] {
                    let sz_occ = SpinOrbitalBasis::spin(i) + SpinOrbitalBasis::spin(j);
                    let sz_virt = SpinOrbitalBasis::spin(a) + SpinOrbitalBasis::spin(b);
                    if sz_occ != sz_virt {
                        continue;
                    }
                    let numerator = spin_ints.antisym(a, b, i, j);
                    let denominator =
                        basis.epsilon[i] + basis.epsilon[j] - basis.epsilon[a] - basis.epsilon[b];
                    if denominator.abs() < DENOMINATOR_TOL {
                        return Err(Error::DegenerateDenominator {
                            label: format!("2_{i},{j}->{a},{b}"),
                            denominator,
                        });
                    }
                    t2.insert(([i, j], [a, b]), numerator / denominator);
                }
            }
        }
    }
    Ok(t2)
}

/// MP2 correlation energy from an amplitude map:
/// `sum over unique doubles of t_ij^ab <ij||ab>`.
pub fn mp2_energy(t2: &HashMap<DoubleKey, f64>, spin_ints: &SpinIntegrals) -> f64 {
    t2.iter()
        .map(|(&([i, j], [a, b]), &t)| t * spin_ints.antisym(i, j, a, b))
        .sum()
}
