"""Generate the FCIDUMP fixtures shipped with saddlekit.

Self-contained quantum-chemistry reference: contracted Gaussian integrals
(McMurchie-Davidson recursions, s and p shells), restricted Hartree-Fock,
a four-index MO transform, and determinant full CI for the sidecar ground
energies. Desk-scale systems only; everything is dense.

Run from the repository root:

    python3 tools/make_fixtures.py
"""

import json
import math
import sys
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.special import gamma, gammainc

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from saddlekit.fcidump import FcidumpData, write_fcidump

# -- basis data (exponents, contraction coefficients on normalized primitives)

H_STO3G = {
    "s": [
        ((3.42525091, 0.62391373, 0.16885540),
         (0.15432897, 0.53532814, 0.44463454)),
    ],
    "p": [],
}

H_631G = {
    "s": [
        ((18.73113696, 2.825394365, 0.6401216923),
         (0.03349460434, 0.2347269535, 0.8137573261)),
        ((0.1612777588,), (1.0,)),
    ],
    "p": [],
}

LI_STO3G = {
    "s": [
        ((16.11957475, 2.936200663, 0.794650487),
         (0.15432897, 0.53532814, 0.44463454)),
        ((0.6362897469, 0.1478600533, 0.0480886784),
         (-0.09996723, 0.39951283, 0.70011547)),
    ],
    "p": [
        ((0.6362897469, 0.1478600533, 0.0480886784),
         (0.15591627, 0.60768372, 0.39195739)),
    ],
}


def primitive_norm(alpha, lmn):
    l, m, n = lmn
    num = (2.0 * alpha / math.pi) ** 0.75 * (4.0 * alpha) ** ((l + m + n) / 2.0)
    den = math.sqrt(
        _double_fact(2 * l - 1) * _double_fact(2 * m - 1) * _double_fact(2 * n - 1)
    )
    return num / den


def _double_fact(n):
    if n <= 0:
        return 1.0
    out = 1.0
    while n > 1:
        out *= n
        n -= 2
    return out


class Shell:
    """One contracted cartesian Gaussian: center, angular momentum, primitives."""

    def __init__(self, center, lmn, exps, coefs):
        self.center = np.asarray(center, dtype=float)
        self.lmn = tuple(lmn)
        self.exps = tuple(exps)
        norms = [primitive_norm(a, lmn) for a in exps]
        self.coefs = tuple(c * n for c, n in zip(coefs, norms))

    def normalize(self, overlap_fn):
        s = overlap_fn(self, self)
        self.coefs = tuple(c / math.sqrt(s) for c in self.coefs)


def boys(n, x):
    if x < 1e-12:
        return 1.0 / (2.0 * n + 1.0)
    h = n + 0.5
    return 0.5 * gamma(h) * gammainc(h, x) / x ** h


def hermite_e(i, j, t, q_dist, a, b):
    """Hermite expansion coefficient E_t^{ij} along one axis."""
    p = a + b
    mu = a * b / p
    if t < 0 or t > i + j:
        return 0.0
    if i == j == t == 0:
        return math.exp(-mu * q_dist * q_dist)
    if j == 0:
        return (
            hermite_e(i - 1, j, t - 1, q_dist, a, b) / (2.0 * p)
            - mu * q_dist / a * hermite_e(i - 1, j, t, q_dist, a, b)
            + (t + 1) * hermite_e(i - 1, j, t + 1, q_dist, a, b)
        )
    return (
        hermite_e(i, j - 1, t - 1, q_dist, a, b) / (2.0 * p)
        + mu * q_dist / b * hermite_e(i, j - 1, t, q_dist, a, b)
        + (t + 1) * hermite_e(i, j - 1, t + 1, q_dist, a, b)
    )


def _overlap_prim(a, lmn1, ca, b, lmn2, cb):
    p = a + b
    pref = (math.pi / p) ** 1.5
    out = pref
    for ax in range(3):
        out *= hermite_e(lmn1[ax], lmn2[ax], 0, ca[ax] - cb[ax], a, b)
    return out


def _kinetic_prim(a, lmn1, ca, b, lmn2, cb):
    l2, m2, n2 = lmn2

    def ov(dl, dm, dn):
        lmn = (l2 + dl, m2 + dm, n2 + dn)
        if min(lmn) < 0:
            return 0.0
        return _overlap_prim(a, lmn1, ca, b, lmn, cb)

    term0 = b * (2 * (l2 + m2 + n2) + 3) * ov(0, 0, 0)
    term1 = -2.0 * b * b * (ov(2, 0, 0) + ov(0, 2, 0) + ov(0, 0, 2))
    term2 = -0.5 * (
        l2 * (l2 - 1) * ov(-2, 0, 0)
        + m2 * (m2 - 1) * ov(0, -2, 0)
        + n2 * (n2 - 1) * ov(0, 0, -2)
    )
    return term0 + term1 + term2


def hermite_coulomb(t, u, v, n, p, pc):
    """Auxiliary integral R^n_{tuv} over the Hermite Coulomb operator."""
    if t < 0 or u < 0 or v < 0:
        return 0.0
    if t == u == v == 0:
        return (-2.0 * p) ** n * boys(n, p * float(pc @ pc))
    if t == u == 0:
        out = pc[2] * hermite_coulomb(0, 0, v - 1, n + 1, p, pc)
        if v > 1:
            out += (v - 1) * hermite_coulomb(0, 0, v - 2, n + 1, p, pc)
        return out
    if t == 0:
        out = pc[1] * hermite_coulomb(0, u - 1, v, n + 1, p, pc)
        if u > 1:
            out += (u - 1) * hermite_coulomb(0, u - 2, v, n + 1, p, pc)
        return out
    out = pc[0] * hermite_coulomb(t - 1, u, v, n + 1, p, pc)
    if t > 1:
        out += (t - 1) * hermite_coulomb(t - 2, u, v, n + 1, p, pc)
    return out


def _nuclear_prim(a, lmn1, ca, b, lmn2, cb, nucleus):
    p = a + b
    pt = (a * ca + b * cb) / p
    pc = pt - nucleus
    l1, m1, n1 = lmn1
    l2, m2, n2 = lmn2
    out = 0.0
    for t in range(l1 + l2 + 1):
        et = hermite_e(l1, l2, t, ca[0] - cb[0], a, b)
        if et == 0.0:
            continue
        for u in range(m1 + m2 + 1):
            eu = hermite_e(m1, m2, u, ca[1] - cb[1], a, b)
            if eu == 0.0:
                continue
            for v in range(n1 + n2 + 1):
                ev = hermite_e(n1, n2, v, ca[2] - cb[2], a, b)
                if ev == 0.0:
                    continue
                out += et * eu * ev * hermite_coulomb(t, u, v, 0, p, pc)
    return 2.0 * math.pi / p * out


def _eri_prim(a, lmn1, ca, b, lmn2, cb, c, lmn3, cc, d, lmn4, cd):
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    pt = (a * ca + b * cb) / p
    qt = (c * cc + d * cd) / q
    pq = pt - qt
    l1, m1, n1 = lmn1
    l2, m2, n2 = lmn2
    l3, m3, n3 = lmn3
    l4, m4, n4 = lmn4

    e1 = [
        [hermite_e(l1, l2, t, ca[0] - cb[0], a, b) for t in range(l1 + l2 + 1)],
        [hermite_e(m1, m2, u, ca[1] - cb[1], a, b) for u in range(m1 + m2 + 1)],
        [hermite_e(n1, n2, v, ca[2] - cb[2], a, b) for v in range(n1 + n2 + 1)],
    ]
    e2 = [
        [hermite_e(l3, l4, t, cc[0] - cd[0], c, d) for t in range(l3 + l4 + 1)],
        [hermite_e(m3, m4, u, cc[1] - cd[1], c, d) for u in range(m3 + m4 + 1)],
        [hermite_e(n3, n4, v, cc[2] - cd[2], c, d) for v in range(n3 + n4 + 1)],
    ]
    out = 0.0
    for t in range(l1 + l2 + 1):
        for u in range(m1 + m2 + 1):
            for v in range(n1 + n2 + 1):
                w1 = e1[0][t] * e1[1][u] * e1[2][v]
                if w1 == 0.0:
                    continue
                for tt in range(l3 + l4 + 1):
                    for uu in range(m3 + m4 + 1):
                        for vv in range(n3 + n4 + 1):
                            w2 = e2[0][tt] * e2[1][uu] * e2[2][vv]
                            if w2 == 0.0:
                                continue
                            sign = (-1.0) ** (tt + uu + vv)
                            out += w1 * w2 * sign * hermite_coulomb(
                                t + tt, u + uu, v + vv, 0, alpha, pq
                            )
    return out * 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))


def _contract2(fn, s1, s2):
    out = 0.0
    for a, c1 in zip(s1.exps, s1.coefs):
        for b, c2 in zip(s2.exps, s2.coefs):
            out += c1 * c2 * fn(a, s1.lmn, s1.center, b, s2.lmn, s2.center)
    return out


def overlap(s1, s2):
    return _contract2(_overlap_prim, s1, s2)


def kinetic(s1, s2):
    return _contract2(_kinetic_prim, s1, s2)


def nuclear(s1, s2, nuclei):
    out = 0.0
    for z, pos in nuclei:
        term = 0.0
        for a, c1 in zip(s1.exps, s1.coefs):
            for b, c2 in zip(s2.exps, s2.coefs):
                term += c1 * c2 * _nuclear_prim(
                    a, s1.lmn, s1.center, b, s2.lmn, s2.center, np.asarray(pos, float)
                )
        out -= z * term
    return out


def eri(s1, s2, s3, s4):
    out = 0.0
    for a, c1 in zip(s1.exps, s1.coefs):
        for b, c2 in zip(s2.exps, s2.coefs):
            for c, c3 in zip(s3.exps, s3.coefs):
                for d, c4 in zip(s4.exps, s4.coefs):
                    out += c1 * c2 * c3 * c4 * _eri_prim(
                        a, s1.lmn, s1.center, b, s2.lmn, s2.center,
                        c, s3.lmn, s3.center, d, s4.lmn, s4.center,
                    )
    return out


def build_shells(atoms):
    """atoms: list of (symbol, position, basis dict). Returns AO shell list."""
    shells = []
    for _, pos, basis in atoms:
        for exps, coefs in basis["s"]:
            shells.append(Shell(pos, (0, 0, 0), exps, coefs))
        for exps, coefs in basis["p"]:
            for lmn in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                shells.append(Shell(pos, lmn, exps, coefs))
    for sh in shells:
        sh.normalize(overlap)
    return shells


def ao_integrals(shells, nuclei):
    n = len(shells)
    s = np.empty((n, n))
    t = np.empty((n, n))
    v = np.empty((n, n))
    for i in range(n):
        for j in range(i + 1):
            s[i, j] = s[j, i] = overlap(shells[i], shells[j])
            t[i, j] = t[j, i] = kinetic(shells[i], shells[j])
            v[i, j] = v[j, i] = nuclear(shells[i], shells[j], nuclei)
    g = np.zeros((n, n, n, n))
    # unique chemists' (ij|kl) representatives, 8-fold expanded
    pairs = [(i, j) for i in range(n) for j in range(i + 1)]
    for a, (i, j) in enumerate(pairs):
        for i2, j2 in pairs[: a + 1]:
            val = eri(shells[i], shells[j], shells[i2], shells[j2])
            for p, q in ((i, j), (j, i)):
                for r, ss in ((i2, j2), (j2, i2)):
                    g[p, q, r, ss] = g[r, ss, p, q] = val
    return s, t + v, g


def scf_rhf(s, hcore, g, n_occ, e_nuc, maxit=200, dtol=1e-12):
    """Closed-shell Roothaan SCF; returns (total energy, MO coefficients)."""
    sval, svec = np.linalg.eigh(s)
    x = svec @ np.diag(sval ** -0.5) @ svec.T
    f = hcore.copy()
    dm = np.zeros_like(s)
    energy = 0.0
    for _ in range(maxit):
        fo = x @ f @ x
        _, co = np.linalg.eigh(0.5 * (fo + fo.T))
        cmo = x @ co
        occ = cmo[:, :n_occ]
        dm_new = occ @ occ.T
        jmat = np.einsum("pqrs,sr->pq", g, dm_new)
        kmat = np.einsum("psrq,sr->pq", g, dm_new)
        f = hcore + 2.0 * jmat - kmat
        energy = 2.0 * np.trace(hcore @ dm_new) + np.trace((2.0 * jmat - kmat) @ dm_new) + e_nuc
        drms = np.sqrt(np.mean((dm_new - dm) ** 2))
        dm = dm_new
        if drms < dtol:
            break
    else:
        raise RuntimeError("SCF did not converge")
    # canonical MOs from the converged Fock
    fo = x @ f @ x
    _, co = np.linalg.eigh(0.5 * (fo + fo.T))
    return float(energy), x @ co


def mo_transform(hcore, g, cmo):
    h_mo = cmo.T @ hcore @ cmo
    g_mo = np.einsum("pi,pqrs->iqrs", cmo, g, optimize=True)
    g_mo = np.einsum("qj,iqrs->ijrs", cmo, g_mo, optimize=True)
    g_mo = np.einsum("rk,ijrs->ijks", cmo, g_mo, optimize=True)
    g_mo = np.einsum("sl,ijks->ijkl", cmo, g_mo, optimize=True)
    return h_mo, g_mo


# -- determinant full CI -------------------------------------------------------


def fci_ground(h_mo, g_mo, nelec, e_core):
    """Lowest eigenvalue of the full CI Hamiltonian in spin orbitals.

    Spin orbital 2p is alpha, 2p+1 beta; physicists <pq|rs> = chemists (pr|qs).
    """
    norb = h_mo.shape[0]
    na = nelec // 2
    strings = list(combinations(range(norb), na))
    dets = []
    for sa in strings:
        for sb in strings:
            occ = tuple(sorted([2 * p for p in sa] + [2 * p + 1 for p in sb]))
            dets.append(occ)

    def h1(p, q):
        return h_mo[p // 2, q // 2] if (p % 2) == (q % 2) else 0.0

    def anti(p, q, r, s):
        # <pq||rs> in spin orbitals
        d1 = g_mo[p // 2, r // 2, q // 2, s // 2] if (p % 2 == r % 2 and q % 2 == s % 2) else 0.0
        d2 = g_mo[p // 2, s // 2, q // 2, r // 2] if (p % 2 == s % 2 and q % 2 == r % 2) else 0.0
        return d1 - d2

    def excitation(d1, d2):
        o1, o2 = set(d1), set(d2)
        holes = sorted(o1 - o2)
        parts = sorted(o2 - o1)
        return holes, parts

    def parity(det, removed, added):
        # sign of reordering after replacing `removed` by `added`, one at a time
        sign = 1
        work = list(det)
        for r, a in zip(removed, added):
            i = work.index(r)
            sign *= (-1) ** i
            work.pop(i)
            j = 0
            while j < len(work) and work[j] < a:
                j += 1
            sign *= (-1) ** j
            work.insert(j, a)
        return sign

    n = len(dets)
    ham = np.zeros((n, n))
    for i, di in enumerate(dets):
        for j in range(i + 1):
            dj = dets[j]
            holes, parts = excitation(di, dj)
            deg = len(holes)
            if deg > 2:
                continue
            if deg == 0:
                val = sum(h1(p, p) for p in di)
                val += 0.5 * sum(anti(p, q, p, q) for p in di for q in di)
            elif deg == 1:
                (p,), (q,) = holes, parts
                val = h1(p, q) + sum(anti(p, r, q, r) for r in di if r != p)
                val *= parity(di, holes, parts)
            else:
                (p, q), (r, s) = holes, parts
                val = anti(p, q, r, s) * parity(di, holes, parts)
            ham[i, j] = ham[j, i] = val
    return float(np.linalg.eigvalsh(ham)[0] + e_core), n


# -- systems -------------------------------------------------------------------


def make_system(name, atoms, nelec):
    shells = build_shells([(sym, pos, basis) for sym, pos, basis, _ in atoms])
    e_nuc = 0.0
    charges = [(a[3], np.asarray(a[1], float)) for a in atoms]
    for i in range(len(charges)):
        for j in range(i):
            zi, ri = charges[i]
            zj, rj = charges[j]
            e_nuc += zi * zj / np.linalg.norm(ri - rj)
    s, hcore, g = ao_integrals(shells, charges)
    n_occ = nelec // 2
    e_rhf, cmo = scf_rhf(s, hcore, g, n_occ, e_nuc)
    h_mo, g_mo = mo_transform(hcore, g, cmo)
    e_fci, ndet = fci_ground(h_mo, g_mo, nelec, e_nuc)
    return {
        "name": name,
        "norb": len(shells),
        "nelec": nelec,
        "e_nuc": float(e_nuc),
        "e_rhf": e_rhf,
        "e_fci": e_fci,
        "ndet": ndet,
        "h_mo": h_mo,
        "g_mo": g_mo,
    }


def main():
    out_dir = Path(__file__).resolve().parents[1] / "src" / "saddlekit" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)

    systems = []
    for r in (0.7, 1.4, 2.8):
        atoms = [
            ("H", (0.0, 0.0, 0.0), H_631G, 1.0),
            ("H", (0.0, 0.0, r), H_631G, 1.0),
        ]
        systems.append((f"h2_631g_r{int(round(r * 1000)):04d}", "H2", "6-31G", r,
                        make_system("h2", atoms, 2)))
    atoms = [
        ("Li", (0.0, 0.0, 0.0), LI_STO3G, 3.0),
        ("H", (0.0, 0.0, 3.0), H_STO3G, 1.0),
    ]
    systems.append(("lih_sto3g_r3000", "LiH", "STO-3G", 3.0,
                    make_system("lih", atoms, 4)))

    for stem, mol, basis, r, sysd in systems:
        data = FcidumpData(
            norb=sysd["norb"],
            nelec=sysd["nelec"],
            ms2=0,
            e_core=sysd["e_nuc"],
            h1e=sysd["h_mo"],
            eri=sysd["g_mo"],
        )
        path = out_dir / f"{stem}.fcidump"
        write_fcidump(data, path)
        sidecar = {
            "molecule": mol,
            "basis": basis,
            "bond_length_bohr": r,
            "nuclear_repulsion": sysd["e_nuc"],
            "rhf_total_energy": sysd["e_rhf"],
            "fci_ground_energy": sysd["e_fci"],
            "n_determinants": sysd["ndet"],
        }
        with open(out_dir / f"{stem}.json", "w") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
        print(f"{stem}: norb={sysd['norb']} E_RHF={sysd['e_rhf']:.9f} "
              f"E_FCI={sysd['e_fci']:.9f} ({sysd['ndet']} dets)")


if __name__ == "__main__":
    main()
