#!/usr/bin/env python3
"""Generate the bundled FCIDUMP fixtures (STO-3G, restricted Hartree-Fock).

Integrals are evaluated with a McMurchie-Davidson scheme, the SCF is a plain
closed-shell RHF with DIIS, and the converged MO-basis integrals are written
in the Knowles-Handy FCIDUMP convention (chemists' notation, 1-based indices,
8-fold unique permutations). Run from the repository root:

    python3 tools/make_fixtures.py

The fixtures are deterministic; regeneration reproduces them bit-for-bit up to
the printed precision.
"""

import math

import numpy as np
from scipy.special import hyp1f1

ANGSTROM_TO_BOHR = 1.0 / 0.52917721092

# STO-3G contractions (exponents, coefficients for normalized primitives)
STO3G = {
    "H": [("s", [3.42525091, 0.62391373, 0.16885540],
           [0.15432897, 0.53532814, 0.44463454])],
    "O": [("s", [130.7093200, 23.8088610, 6.4436083],
           [0.15432897, 0.53532814, 0.44463454]),
          ("s", [5.0331513, 1.1695961, 0.3803890],
           [-0.09996723, 0.39951283, 0.70011547]),
          ("p", [5.0331513, 1.1695961, 0.3803890],
           [0.15591627, 0.60768372, 0.39195739])],
}

CHARGE = {"H": 1, "O": 8}


def boys(n, x):
    return hyp1f1(n + 0.5, n + 1.5, -x) / (2.0 * n + 1.0)


def hermite_e(i, j, t, qx, a, b):
    """Hermite expansion coefficient E_t^{ij} for a Gaussian product."""
    p = a + b
    q = a * b / p
    if t < 0 or t > i + j:
        return 0.0
    if i == j == t == 0:
        return math.exp(-q * qx * qx)
    if j == 0:
        return (hermite_e(i - 1, j, t - 1, qx, a, b) / (2 * p)
                - q * qx / a * hermite_e(i - 1, j, t, qx, a, b)
                + (t + 1) * hermite_e(i - 1, j, t + 1, qx, a, b))
    return (hermite_e(i, j - 1, t - 1, qx, a, b) / (2 * p)
            + q * qx / b * hermite_e(i, j - 1, t, qx, a, b)
            + (t + 1) * hermite_e(i, j - 1, t + 1, qx, a, b))


def overlap_prim(a, la, ra, b, lb, rb):
    s = 1.0
    for k in range(3):
        s *= hermite_e(la[k], lb[k], 0, ra[k] - rb[k], a, b)
    return s * (math.pi / (a + b)) ** 1.5


def kinetic_prim(a, la, ra, b, lb, rb):
    l, m, n = lb
    term0 = b * (2 * (l + m + n) + 3) * overlap_prim(a, la, ra, b, lb, rb)
    term1 = -2 * b * b * (
        overlap_prim(a, la, ra, b, (l + 2, m, n), rb)
        + overlap_prim(a, la, ra, b, (l, m + 2, n), rb)
        + overlap_prim(a, la, ra, b, (l, m, n + 2), rb))
    term2 = 0.0
    if l >= 2:
        term2 += -0.5 * l * (l - 1) * overlap_prim(a, la, ra, b, (l - 2, m, n), rb)
    if m >= 2:
        term2 += -0.5 * m * (m - 1) * overlap_prim(a, la, ra, b, (l, m - 2, n), rb)
    if n >= 2:
        term2 += -0.5 * n * (n - 1) * overlap_prim(a, la, ra, b, (l, m, n - 2), rb)
    return term0 + term1 + term2


def hermite_coulomb(t, u, v, n, p, pc):
    x, y, z = pc
    r2 = x * x + y * y + z * z
    if t == u == v == 0:
        return (-2.0 * p) ** n * boys(n, p * r2)
    if t > 0:
        val = 0.0
        if t > 1:
            val += (t - 1) * hermite_coulomb(t - 2, u, v, n + 1, p, pc)
        val += x * hermite_coulomb(t - 1, u, v, n + 1, p, pc)
        return val
    if u > 0:
        val = 0.0
        if u > 1:
            val += (u - 1) * hermite_coulomb(t, u - 2, v, n + 1, p, pc)
        val += y * hermite_coulomb(t, u - 1, v, n + 1, p, pc)
        return val
    val = 0.0
    if v > 1:
        val += (v - 1) * hermite_coulomb(t, u, v - 2, n + 1, p, pc)
    val += z * hermite_coulomb(t, u, v - 1, n + 1, p, pc)
    return val


def nuclear_prim(a, la, ra, b, lb, rb, rc):
    p = a + b
    rp = (a * np.asarray(ra) + b * np.asarray(rb)) / p
    pc = rp - np.asarray(rc)
    val = 0.0
    for t in range(la[0] + lb[0] + 1):
        for u in range(la[1] + lb[1] + 1):
            for v in range(la[2] + lb[2] + 1):
                e = (hermite_e(la[0], lb[0], t, ra[0] - rb[0], a, b)
                     * hermite_e(la[1], lb[1], u, ra[1] - rb[1], a, b)
                     * hermite_e(la[2], lb[2], v, ra[2] - rb[2], a, b))
                val += e * hermite_coulomb(t, u, v, 0, p, pc)
    return 2.0 * math.pi / p * val


def eri_prim(a, la, ra, b, lb, rb, c, lc, rc, d, ld, rd):
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    rp = (a * np.asarray(ra) + b * np.asarray(rb)) / p
    rq = (c * np.asarray(rc) + d * np.asarray(rd)) / q
    pq = rp - rq
    val = 0.0
    for t in range(la[0] + lb[0] + 1):
        for u in range(la[1] + lb[1] + 1):
            for v in range(la[2] + lb[2] + 1):
                e1 = (hermite_e(la[0], lb[0], t, ra[0] - rb[0], a, b)
                      * hermite_e(la[1], lb[1], u, ra[1] - rb[1], a, b)
                      * hermite_e(la[2], lb[2], v, ra[2] - rb[2], a, b))
                if e1 == 0.0:
                    continue
                for tt in range(lc[0] + ld[0] + 1):
                    for uu in range(lc[1] + ld[1] + 1):
                        for vv in range(lc[2] + ld[2] + 1):
                            e2 = (hermite_e(lc[0], ld[0], tt, rc[0] - rd[0], c, d)
                                  * hermite_e(lc[1], ld[1], uu, rc[1] - rd[1], c, d)
                                  * hermite_e(lc[2], ld[2], vv, rc[2] - rd[2], c, d))
                            if e2 == 0.0:
                                continue
                            val += (e1 * e2 * (-1.0) ** (tt + uu + vv)
                                    * hermite_coulomb(t + tt, u + uu, v + vv, 0,
                                                      alpha, pq))
    return val * 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))


def prim_norm(a, l):
    lx, ly, lz = l
    num = (2.0 * a / math.pi) ** 0.75 * (4.0 * a) ** ((lx + ly + lz) / 2.0)
    den = math.sqrt(df(2 * lx - 1) * df(2 * ly - 1) * df(2 * lz - 1))
    return num / den


def df(n):
    return 1 if n <= 0 else n * df(n - 2)


class Basis:
    """Flat list of contracted Cartesian Gaussians."""

    def __init__(self, atoms):
        self.funcs = []  # (l, center, [(exp, contraction*norm)])
        for sym, r in atoms:
            for shell, exps, coeffs in STO3G[sym]:
                if shell == "s":
                    angs = [(0, 0, 0)]
                else:
                    angs = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
                for l in angs:
                    prims = [(a, c * prim_norm(a, l)) for a, c in zip(exps, coeffs)]
                    # contracted normalization
                    s = 0.0
                    for a1, c1 in prims:
                        for a2, c2 in prims:
                            s += c1 * c2 * overlap_prim(a1, l, r, a2, l, r)
                    scale = 1.0 / math.sqrt(s)
                    prims = [(a, c * scale) for a, c in prims]
                    self.funcs.append((l, np.asarray(r, dtype=float), prims))

    def __len__(self):
        return len(self.funcs)


def one_electron(basis, atoms):
    n = len(basis)
    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    for i, (li, ri, pi) in enumerate(basis.funcs):
        for j, (lj, rj, pj) in enumerate(basis.funcs):
            if j > i:
                continue
            sij = tij = vij = 0.0
            for a, ca in pi:
                for b, cb in pj:
                    sij += ca * cb * overlap_prim(a, li, ri, b, lj, rj)
                    tij += ca * cb * kinetic_prim(a, li, ri, b, lj, rj)
                    for sym, rc in atoms:
                        vij -= CHARGE[sym] * ca * cb * nuclear_prim(
                            a, li, ri, b, lj, rj, rc)
            s[i, j] = s[j, i] = sij
            t[i, j] = t[j, i] = tij
            v[i, j] = v[j, i] = vij
    return s, t, v


def two_electron(basis):
    n = len(basis)
    eri = np.zeros((n, n, n, n))
    done = {}
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    ij = i * (i + 1) // 2 + j
                    kl = k * (k + 1) // 2 + l
                    if ij < kl:
                        continue
                    li, ri, pi = basis.funcs[i]
                    lj, rj, pj = basis.funcs[j]
                    lk, rk, pk = basis.funcs[k]
                    ll, rl, pl = basis.funcs[l]
                    val = 0.0
                    for a, ca in pi:
                        for b, cb in pj:
                            for c, cc in pk:
                                for d, cd in pl:
                                    val += ca * cb * cc * cd * eri_prim(
                                        a, li, ri, b, lj, rj,
                                        c, lk, rk, d, ll, rl)
                    for (p, q, r, s) in [(i, j, k, l), (j, i, k, l),
                                         (i, j, l, k), (j, i, l, k),
                                         (k, l, i, j), (l, k, i, j),
                                         (k, l, j, i), (l, k, j, i)]:
                        eri[p, q, r, s] = val
    return eri


def nuclear_repulsion(atoms):
    e = 0.0
    for i, (si, ri) in enumerate(atoms):
        for j, (sj, rj) in enumerate(atoms):
            if j >= i:
                continue
            e += CHARGE[si] * CHARGE[sj] / np.linalg.norm(
                np.asarray(ri) - np.asarray(rj))
    return e


def rhf(s, hcore, eri, n_elec, e_nuc):
    nocc = n_elec // 2
    w, u = np.linalg.eigh(s)
    x = u @ np.diag(w ** -0.5) @ u.T
    f = hcore.copy()
    d = np.zeros_like(s)
    e_old = 0.0
    errs, focks = [], []
    for it in range(200):
        fp = x.T @ f @ x
        eps, cp = np.linalg.eigh(fp)
        c = x @ cp
        cocc = c[:, :nocc]
        d = cocc @ cocc.T
        j = np.einsum("pqrs,rs->pq", eri, d)
        k = np.einsum("prqs,rs->pq", eri, d)
        f = hcore + 2.0 * j - k
        e = np.sum(d * (hcore + f)) + e_nuc
        err = f @ d @ s - s @ d @ f
        errs.append(err)
        focks.append(f.copy())
        if len(errs) > 8:
            errs.pop(0)
            focks.pop(0)
        if abs(e - e_old) < 1e-13 and np.max(np.abs(err)) < 1e-10 and it > 2:
            return e, eps, c
        e_old = e
        if len(errs) >= 2:
            m = len(errs)
            bmat = -np.ones((m + 1, m + 1))
            bmat[m, m] = 0.0
            for a in range(m):
                for b in range(m):
                    bmat[a, b] = np.sum(errs[a] * errs[b])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                coef = np.linalg.solve(bmat, rhs)[:m]
                f = sum(ci * fi for ci, fi in zip(coef, focks))
            except np.linalg.LinAlgError:
                pass
    raise RuntimeError("SCF did not converge")


def write_fcidump(path, c, hcore, eri, e_nuc, n_elec, eps):
    n = c.shape[1]
    h_mo = c.T @ hcore @ c
    eri_mo = np.einsum("pqrs,pi,qj,rk,sl->ijkl", eri, c, c, c, c, optimize=True)
    with open(path, "w") as fh:
        orbsym = ",".join(["1"] * n)
        fh.write(f"&FCI NORB={n},NELEC={n_elec},MS2=0,\n")
        fh.write(f" ORBSYM={orbsym},\n ISYM=1,\n&END\n")
        thresh = 1e-12
        for i in range(n):
            for j in range(i + 1):
                for k in range(n):
                    for l in range(k + 1):
                        ij = i * (i + 1) // 2 + j
                        kl = k * (k + 1) // 2 + l
                        if ij < kl:
                            continue
                        v = eri_mo[i, j, k, l]
                        if abs(v) > thresh:
                            fh.write(f"{v:23.16E} {i+1:4d} {j+1:4d} "
                                     f"{k+1:4d} {l+1:4d}\n")
        for i in range(n):
            for j in range(i + 1):
                v = h_mo[i, j]
                if abs(v) > thresh:
                    fh.write(f"{v:23.16E} {i+1:4d} {j+1:4d}    0    0\n")
        for i in range(n):
            fh.write(f"{eps[i]:23.16E} {i+1:4d}    0    0    0\n")
        fh.write(f"{e_nuc:23.16E}    0    0    0    0\n")


def build(path, atoms, n_elec):
    atoms = [(sym, np.asarray(r, dtype=float) * ANGSTROM_TO_BOHR)
             for sym, r in atoms]
    basis = Basis(atoms)
    s, t, v = one_electron(basis, atoms)
    eri = two_electron(basis)
    e_nuc = nuclear_repulsion(atoms)
    e_hf, eps, c = rhf(s, t + v, eri, n_elec, e_nuc)
    write_fcidump(path, c, t + v, eri, e_nuc, n_elec, eps)
    print(f"{path}: E_HF = {e_hf:.10f} Ha, E_nuc = {e_nuc:.10f} Ha")


def h4_chain(r):
    return [("H", (0.0, 0.0, i * r)) for i in range(4)]


def h2o(r_oh, angle_deg):
    half = math.radians(angle_deg) / 2.0
    return [
        ("O", (0.0, 0.0, 0.0)),
        ("H", (r_oh * math.sin(half), 0.0, r_oh * math.cos(half))),
        ("H", (-r_oh * math.sin(half), 0.0, r_oh * math.cos(half))),
    ]


if __name__ == "__main__":
    out = "crates/mlpqe/fixtures"
    build(f"{out}/h2_0.7414.fcidump",
          [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 0.7414))], 2)
    build(f"{out}/h4_0.75.fcidump", h4_chain(0.75), 4)
    build(f"{out}/h4_1.5.fcidump", h4_chain(1.5), 4)
    build(f"{out}/h2o_eq.fcidump", h2o(0.958, 104.4776), 10)
    build(f"{out}/h2o_stretched.fcidump", h2o(1.5 * 0.958, 104.4776), 10)
