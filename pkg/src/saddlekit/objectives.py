"""Objective functions: the eigenvalue test family and restricted Hartree-Fock.

An Objective packages Euclidean callbacks (value, gradient, optional Hessian
action) plus an optional closed-form Riemannian Hessian. Solvers never look
inside; they go through manifolds.riemannian_gradient / riemannian_hessian_vec.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ClosedShellViolation, InvalidInput
from .fcidump import FcidumpData
from .linalg import qr_positive


@dataclass(frozen=True)
class Objective:
    """Smooth function on an ambient space, with optional Hessian routes.

    rhess_override, when present, maps (point, tangent) to the Riemannian
    Hessian action directly; the generic route assembles it from ehess_vec
    plus the manifold's curvature correction.
    """

    value: Callable[[np.ndarray], float]
    egrad: Callable[[np.ndarray], np.ndarray]
    ehess_vec: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    rhess_override: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = ""


# -- linear eigenvalue problem family -----------------------------------------


@dataclass(frozen=True)
class LepSpec:
    """Synthetic symmetric matrix A = U diag(sigma) U^T with known spectrum.

    sigma_i = xi^(i-n) for i = 1..n (ascending, all distinct for xi > 1);
    U is the Q factor of a seeded standard normal matrix.
    """

    n: int
    p: int
    xi: float
    seed: int = 0
    a: np.ndarray = field(repr=False, default=None)
    u: np.ndarray = field(repr=False, default=None)
    sigma: np.ndarray = field(repr=False, default=None)


def make_lep(n: int, p: int, xi: float, seed: int = 0) -> LepSpec:
    """Build the test matrix; eigenvalues are exactly xi^(i-n), i = 1..n."""
    if not 1 <= p <= n - 1:
        raise InvalidInput("make_lep needs 1 <= p <= n-1")
    if xi <= 1.0:
        raise InvalidInput("make_lep needs xi > 1 for a distinct spectrum")
    rng = np.random.default_rng(seed)
    u, _ = qr_positive(rng.standard_normal((n, n)))
    sigma = xi ** (np.arange(1, n + 1) - n).astype(float)
    a = (u * sigma) @ u.T
    return LepSpec(n=n, p=p, xi=xi, seed=seed, a=0.5 * (a + a.T), u=u, sigma=sigma)


def lep_grassmann_objective(spec: LepSpec) -> Objective:
    """f(P) = (1/2) Tr(P A) on rank-p projectors.

    Euclidean gradient is the constant A/2 (f is linear in P), so the
    Euclidean Hessian action is zero and the curvature correction carries the
    whole Riemannian Hessian. The closed form is (1/2)[P, [G, A]].
    """
    a = spec.a
    half_a = 0.5 * a

    def value(p: np.ndarray) -> float:
        return 0.5 * float(np.trace(p @ a))

    def egrad(p: np.ndarray) -> np.ndarray:
        return half_a.copy()

    def ehess_vec(p: np.ndarray, d: np.ndarray) -> np.ndarray:
        return np.zeros_like(d)

    def rhess(p: np.ndarray, g: np.ndarray) -> np.ndarray:
        inner = g @ half_a - half_a @ g  # [G, A/2]
        return p @ inner - inner @ p     # [P, [G, A/2]]

    return Objective(value, egrad, ehess_vec, rhess, name=f"lep_grassmann(n={spec.n},p={spec.p})")


def lep_stiefel_objective(spec: LepSpec) -> Objective:
    """f(X) = (1/2) Tr(X^T A X) on orthonormal p-frames.

    No closed-form Riemannian Hessian is attached; the generic route
    exercises the Weingarten correction on this formulation.
    """
    a = spec.a

    def value(x: np.ndarray) -> float:
        return 0.5 * float(np.trace(x.T @ (a @ x)))

    def egrad(x: np.ndarray) -> np.ndarray:
        return a @ x

    def ehess_vec(x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return a @ v

    return Objective(value, egrad, ehess_vec, None, name=f"lep_stiefel(n={spec.n},p={spec.p})")


# -- restricted Hartree-Fock ---------------------------------------------------


def coulomb_exchange(data: FcidumpData, gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coulomb and exchange matrices of a density-like symmetric matrix.

    J_pq = sum_rs (pq|rs) gamma_sr,  K_pq = sum_rs (ps|rq) gamma_sr.
    Both are symmetric for symmetric gamma because the integrals carry the
    full 8-fold permutation symmetry.
    """
    g = np.asarray(gamma, dtype=float)
    if g.shape != (data.norb, data.norb):
        raise InvalidInput(f"gamma shape {g.shape} != ({data.norb}, {data.norb})")
    j = np.einsum("pqrs,sr->pq", data.eri, g, optimize=True)
    k = np.einsum("psrq,sr->pq", data.eri, g, optimize=True)
    return j, k


@dataclass(frozen=True)
class RhfObjective:
    """Closed-shell Hartree-Fock energy on the plane of occupied orbitals.

    E(gamma) = 2 Tr(h gamma) + Tr((2J(gamma) - K(gamma)) gamma) + e_core,
    with gamma a rank-(nelec/2) projector in the orthonormal orbital basis of
    the integral file. Fock matrix: F = h + 2J - K; Euclidean gradient: 2F.
    """

    data: FcidumpData
    objective: Objective
    n_occ: int

    @property
    def norb(self) -> int:
        return self.data.norb


def rhf_objective(data: FcidumpData) -> RhfObjective:
    """Build the RHF energy objective from parsed integrals.

    Raises ClosedShellViolation for odd electron counts and InvalidInput when
    the occupation would not fit the orbital space. The closed-form Riemannian
    Hessian differentiates the tangent gradient field [g, [g, 2F(g)]]:
    D[d] = [d, [g, 2F]] + [g, [d, 2F]] + [g, [g, dF]] with dF = 2(2J(d)-K(d)),
    then projects with [g, [g, .]].
    """
    if data.nelec % 2 != 0:
        raise ClosedShellViolation(f"nelec = {data.nelec} is odd")
    n_occ = data.nelec // 2
    if not 1 <= n_occ <= data.norb - 1:
        raise InvalidInput(f"occupied count {n_occ} outside 1..{data.norb - 1}")
    h = data.h1e
    e_core = data.e_core

    def fock(g: np.ndarray) -> np.ndarray:
        j, k = coulomb_exchange(data, g)
        return h + 2.0 * j - k

    def value(g: np.ndarray) -> float:
        j, k = coulomb_exchange(data, g)
        return float(2.0 * np.trace(h @ g) + np.trace((2.0 * j - k) @ g) + e_core)

    def egrad(g: np.ndarray) -> np.ndarray:
        return 2.0 * fock(g)

    def ehess_vec(g: np.ndarray, d: np.ndarray) -> np.ndarray:
        j, k = coulomb_exchange(data, d)
        return 2.0 * (2.0 * j - k)

    def comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a @ b - b @ a

    def rhess(g: np.ndarray, d: np.ndarray) -> np.ndarray:
        f2 = 2.0 * fock(g)
        dj, dk = coulomb_exchange(data, d)
        df = 2.0 * (2.0 * dj - dk)
        # [g,[g,.]] is idempotent, so df needs no separate pre-projection
        dgbar = comm(d, comm(g, f2)) + comm(g, comm(d, f2)) + df
        return comm(g, comm(g, dgbar))

    obj = Objective(value, egrad, ehess_vec, rhess, name=f"rhf(norb={data.norb},nocc={n_occ})")
    return RhfObjective(data=data, objective=obj, n_occ=n_occ)


def core_guess(data: FcidumpData, n_occ: int) -> np.ndarray:
    """Projector onto the lowest n_occ eigenvectors of the core Hamiltonian."""
    w, v = np.linalg.eigh(data.h1e)
    frame = v[:, :n_occ]
    p = frame @ frame.T
    return 0.5 * (p + p.T)
