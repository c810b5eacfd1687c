"""Deterministic dense linear algebra kernel.

Thin wrappers over LAPACK (via numpy) that pin down the conventions the rest
of the package relies on: ascending symmetric eigensystems, QR with a
nonnegative R diagonal so factors are unique, rank-revealing thin SVD with a
fixed relative cutoff, and validated matrix containers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .errors import InvalidInput, RankDeficient


def _as_float_array(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SymMatrix:
    """Square symmetric matrix; constructor enforces symmetry."""

    mat: np.ndarray

    def __post_init__(self):
        m = _as_float_array(self.mat, "SymMatrix")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInput(f"SymMatrix needs a square matrix, got {m.shape}")
        scale = 1.0 + np.abs(m).max(initial=0.0)
        if np.abs(m - m.T).max(initial=0.0) > 1e-10 * scale:
            raise InvalidInput("matrix is not symmetric within tolerance")
        object.__setattr__(self, "mat", 0.5 * (m + m.T))

    @property
    def n(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class Frame:
    """Matrix with orthonormal columns (n x k, k <= n)."""

    cols: np.ndarray

    def __post_init__(self):
        v = _as_float_array(self.cols, "Frame")
        if v.ndim != 2 or v.shape[0] < v.shape[1]:
            raise InvalidInput(f"Frame needs n >= k, got {v.shape}")
        gram = v.T @ v
        if np.abs(gram - np.eye(v.shape[1])).max(initial=0.0) > tol.FRAME_ORTHO_TOL:
            raise InvalidInput("columns are not orthonormal within tolerance")
        object.__setattr__(self, "cols", v)

    @property
    def n(self) -> int:
        return self.cols.shape[0]

    @property
    def k(self) -> int:
        return self.cols.shape[1]


@dataclass(frozen=True)
class Projector:
    """Symmetric idempotent matrix of known rank."""

    mat: np.ndarray
    rank: int

    def __post_init__(self):
        m = _as_float_array(self.mat, "Projector")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInput(f"Projector needs a square matrix, got {m.shape}")
        if np.abs(m - m.T).max(initial=0.0) > tol.PROJECTOR_TOL:
            raise InvalidInput("projector is not symmetric within tolerance")
        if np.abs(m @ m - m).max(initial=0.0) > tol.PROJECTOR_TOL:
            raise InvalidInput("projector is not idempotent within tolerance")
        if abs(np.trace(m) - self.rank) > tol.PROJECTOR_TOL * m.shape[0]:
            raise InvalidInput("projector trace does not equal its rank")

    @property
    def n(self) -> int:
        return self.mat.shape[0]


def sym_eig(m) -> tuple[np.ndarray, Frame]:
    """Full eigensystem of a symmetric matrix, eigenvalues ascending.

    Returns (w, V) with m = V diag(w) V^T and V an orthonormal Frame.
    """
    a = m.mat if isinstance(m, SymMatrix) else _as_float_array(m, "sym_eig input")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"sym_eig needs a square matrix, got {a.shape}")
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    return w, Frame(v)


def qr_positive(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR with the R diagonal made nonnegative (unique factors).

    Raw helper used in hot paths; does not rank-check. Zero columns in Q
    keep whatever sign LAPACK produced for the corresponding R_ii = 0.
    """
    q, r = np.linalg.qr(m)
    s = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return q * s, r * s[:, None]


def thin_qr(m) -> Frame:
    """Orthonormalize the columns of an n x k matrix (n >= k).

    Sign convention: diag(R) >= 0, so the factor is deterministic.
    Raises RankDeficient when a diagonal entry of R collapses.
    """
    a = _as_float_array(m, "thin_qr input")
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise InvalidInput(f"thin_qr needs n >= k, got {a.shape}")
    if a.shape[1] == 0:
        return Frame(a.copy())
    q, r = qr_positive(a)
    d = np.abs(np.diag(r))
    if d.min(initial=np.inf) <= tol.QR_RANK_REL * max(1.0, d.max(initial=0.0)):
        raise RankDeficient("thin_qr input is numerically rank-deficient")
    return Frame(q)


def thin_svd(m) -> tuple[Frame, np.ndarray, Frame]:
    """Rank-revealing thin SVD: m = Q diag(s) U^T with s descending.

    Singular values at or below SVD_RANK_REL * sigma_max are discarded, so a
    zero matrix yields rank 0 and empty factors.
    """
    a = _as_float_array(m, "thin_svd input")
    if a.ndim != 2:
        raise InvalidInput(f"thin_svd needs a matrix, got shape {a.shape}")
    q, s, uh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        r = 0
    else:
        r = int(np.sum(s > tol.SVD_RANK_REL * s[0]))
    return Frame(q[:, :r]), s[:r].copy(), Frame(uh[:r].T)


def commutator(a, b) -> np.ndarray:
    """[a, b] = a b - b a for square matrices of equal shape."""
    x = _as_float_array(a, "commutator a")
    y = _as_float_array(b, "commutator b")
    if x.shape != y.shape or x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise InvalidInput(f"commutator needs equal square shapes, got {x.shape} and {y.shape}")
    return x @ y - y @ x
