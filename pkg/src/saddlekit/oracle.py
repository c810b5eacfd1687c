"""Ground truth the solver is checked against.

Two independent kinds of oracle live here:

* the analytic critical-point catalog of the eigenvalue family: every
  p-subset of eigenvectors of A is a critical point of the trace objective,
  with value, Morse index, and Hessian spectrum known in closed form;
* finite-difference probes for gradients, Hessian actions, and the
  derivative of the tangent-projector field, built only from objective
  values/Euclidean gradients and retraction curves, never from the closed
  forms they are used to check.

Catalog spectra are eigenvalue differences sigma_a - sigma_i of the
unit-coefficient trace objective Tr(PA); the packaged (1/2)Tr(PA) objective
has a Riemannian Hessian spectrum of exactly half these values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .errors import AmbiguousMatch, DegenerateSums, InvalidInput
from .linalg import sym_eig
from .manifolds import Manifold
from .objectives import LepSpec


@dataclass(frozen=True)
class CatalogEntry:
    """One critical point: the plane spanned by eigenvectors in `config`."""

    config: tuple[int, ...]          # 1-based positions in the ascending spectrum
    value: float                     # (1/2) sum of selected eigenvalues
    index: int                       # negative Hessian eigenvalue count
    spectrum: np.ndarray             # ascending sigma_a - sigma_i differences
    projector: np.ndarray
    frame: np.ndarray


@dataclass(frozen=True)
class CriticalPointCatalog:
    n: int
    p: int
    xi: float
    seed: int
    sigma: np.ndarray
    entries: tuple[CatalogEntry, ...]

    def entry_for_config(self, config) -> CatalogEntry:
        key = tuple(sorted(int(c) for c in config))
        for e in self.entries:
            if e.config == key:
                return e
        raise InvalidInput(f"no catalog entry for config {key}")

    def by_index(self, index: int) -> list[CatalogEntry]:
        return [e for e in self.entries if e.index == index]

    def min_value_separation(self) -> float:
        vals = np.sort(np.array([e.value for e in self.entries]))
        return float(np.min(np.diff(vals))) if vals.size > 1 else np.inf


def _entry_from_eigsystem(
    sigma: np.ndarray, vecs: np.ndarray, config: tuple[int, ...]
) -> CatalogEntry:
    n = sigma.size
    occ = np.array(config, dtype=int) - 1
    rest = np.setdiff1d(np.arange(n), occ)
    value = 0.5 * float(sigma[occ].sum())
    index = int(sum(1 for i in occ for a in rest if a < i))
    spectrum = np.sort((sigma[rest][None, :] - sigma[occ][:, None]).reshape(-1))
    if int(np.sum(spectrum < 0.0)) != index:
        raise DegenerateSums(f"config {config}: spectrum sign count disagrees with index")
    frame = vecs[:, occ]
    proj = frame @ frame.T
    return CatalogEntry(
        config=tuple(int(c) for c in config),
        value=value,
        index=index,
        spectrum=spectrum,
        projector=0.5 * (proj + proj.T),
        frame=frame,
    )


def catalog_entry(spec: LepSpec, config) -> CatalogEntry:
    """Single catalog entry without enumerating the full combinatorial set."""
    key = tuple(sorted(int(c) for c in config))
    if len(key) != spec.p or len(set(key)) != spec.p or key[0] < 1 or key[-1] > spec.n:
        raise InvalidInput(f"config {config} is not a p-subset of 1..{spec.n}")
    w, v = sym_eig(spec.a)
    return _entry_from_eigsystem(w, v.cols, key)


def enumerate_catalog(spec: LepSpec, max_entries: int = 200_000) -> CriticalPointCatalog:
    """All C(n, p) critical points, with distinct-value validation.

    Raises DegenerateSums when two entries' values collide within
    CATALOG_VALUE_SEP (the catalog could then not be identified by value),
    and InvalidInput when the combinatorial count exceeds max_entries.
    """
    import math

    count = math.comb(spec.n, spec.p)
    if count > max_entries:
        raise InvalidInput(f"catalog would hold {count} entries (> {max_entries})")
    w, v = sym_eig(spec.a)
    entries = tuple(
        _entry_from_eigsystem(w, v.cols, config)
        for config in itertools.combinations(range(1, spec.n + 1), spec.p)
    )
    cat = CriticalPointCatalog(
        n=spec.n, p=spec.p, xi=spec.xi, seed=spec.seed, sigma=w, entries=entries
    )
    if cat.min_value_separation() <= tol.CATALOG_VALUE_SEP:
        raise DegenerateSums("catalog values are not pairwise separated")
    return cat


def match_terminal(
    catalog: CriticalPointCatalog, terminal: np.ndarray, match_tol: float = tol.MATCH_TOL
) -> CatalogEntry | None:
    """Match a terminal plane to a catalog entry by projector distance.

    Accepts either an n x n projector or an n x p orthonormal frame. Returns
    None when nothing is within match_tol; raises AmbiguousMatch when more
    than one entry is.
    """
    t = np.asarray(terminal, dtype=float)
    if t.shape == (catalog.n, catalog.n):
        proj = t
    elif t.ndim == 2 and t.shape[0] == catalog.n:
        proj = t @ t.T
    else:
        raise InvalidInput(f"terminal shape {t.shape} fits neither projector nor frame")
    hits = [e for e in catalog.entries if np.linalg.norm(proj - e.projector) <= match_tol]
    if len(hits) > 1:
        raise AmbiguousMatch(f"{len(hits)} entries within {match_tol}")
    return hits[0] if hits else None


# -- finite-difference probes --------------------------------------------------


def fd_gradient(obj, manifold: Manifold, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Riemannian gradient from central differences of f along retractions."""
    basis = manifold.tangent_basis(x)
    comps = np.empty(basis.shape[1])
    for k in range(basis.shape[1]):
        b = manifold.unflatten(basis[:, k])
        fp = obj.value(manifold.retract(x, h * b))
        fm = obj.value(manifold.retract(x, -h * b))
        comps[k] = (fp - fm) / (2.0 * h)
    return manifold.unflatten(basis @ comps)


def fd_hessian_vec(obj, manifold: Manifold, x, v, h: float = 1e-5) -> np.ndarray:
    """Hessian action from differencing the tangent-projected gradient field."""
    yp = manifold.retract(x, h * v)
    ym = manifold.retract(x, -h * v)
    gp = manifold.project(yp, obj.egrad(yp))
    gm = manifold.project(ym, obj.egrad(ym))
    return manifold.project(x, (gp - gm) / (2.0 * h))


def fd_projector_differential(manifold: Manifold, x, u, a, h: float = 1e-6) -> np.ndarray:
    """Derivative of y -> Proj_y(a) along a curve through x with velocity u.

    Not projected: for tangent a its normal part is the second fundamental
    form, for normal a its tangent part is the Weingarten term.
    """
    yp = manifold.retract(x, h * u)
    ym = manifold.retract(x, -h * u)
    return (manifold.project(yp, a) - manifold.project(ym, a)) / (2.0 * h)
