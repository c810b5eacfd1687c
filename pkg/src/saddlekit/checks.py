"""Named geometry property checks runnable from tests and the CLI.

Each check sweeps seeded random trials on each manifold and reports the
worst observed residual (or, for order checks, the worst observed
convergence order). Bounds are part of the public contract; the CLI `check`
subcommand exits nonzero if any check fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import (
    BundleDirection,
    BundleState,
    advance_plane,
    bundle_retract,
    bundle_tangent_basis,
    sasaki_inner,
)
from .manifolds import (
    FixedRank,
    Flat,
    GrassmannProjector,
    Manifold,
    Sphere,
    Stiefel,
    riemannian_hessian_vec,
)
from .objectives import Objective
from .oracle import fd_projector_differential


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    manifold: str
    trials: int
    worst: float
    bound: float
    direction: str  # "<=" for residuals, ">=" for orders
    passed: bool

    def describe(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"{status}  {self.name:24s} {self.manifold:16s} "
            f"worst {self.worst:.3e} (need {self.direction} {self.bound:g}, "
            f"{self.trials} trials)"
        )


BOUNDS = {
    "projection_idempotency": 1e-12,
    "ii_normality": 1e-9,
    "ii_fd_agreement": 1e-4,
    "retraction_order": 1.9,
    "bundle_retraction_order": 1.9,
    "sasaki_orthonormality": 1e-8,
    "gauge_invariance": 1e-10,
    "hessian_symmetry": 1e-8,
}

FULL_MANIFOLDS = (Sphere(7), Stiefel(6, 2), GrassmannProjector(6, 2), Flat((3, 4)))
II_ONLY_MANIFOLDS = (FixedRank(5, 4, 2),)


def _poly_objective(man: Manifold) -> Objective:
    """Deterministic quartic test objective with an exact Euclidean Hessian."""
    rng = np.random.default_rng(3)
    bf = man.flatten(man.random_ambient(rng))
    cf = man.flatten(man.random_ambient(rng))

    def value(x):
        xf = man.flatten(x)
        return float(bf @ xf + (cf @ xf) ** 2 + 0.1 * (xf @ xf) ** 2)

    def egrad(x):
        xf = man.flatten(x)
        return man.unflatten(bf + 2.0 * (cf @ xf) * cf + 0.4 * (xf @ xf) * xf)

    def ehess(x, v):
        xf, vf = man.flatten(x), man.flatten(v)
        return man.unflatten(
            2.0 * (cf @ vf) * cf + 0.4 * ((xf @ xf) * vf + 2.0 * (xf @ vf) * xf)
        )

    return Objective(value=value, egrad=egrad, ehess_vec=ehess, name=f"poly[{man.name}]")


def _unit_tangent(man, x, rng):
    v = man.random_tangent(x, rng)
    nv = man.norm(v)
    return v if nv == 0 else v / nv


def check_projection_idempotency(man, trials, rng):
    worst = 0.0
    for _ in range(trials):
        x = man.random_point(rng)
        a = man.random_ambient(rng)
        a = a / max(1.0, np.linalg.norm(man.flatten(a)))
        p1 = man.project(x, a)
        worst = max(worst, man.norm(man.project(x, p1) - p1))
    return worst


def check_ii_normality(man, trials, rng):
    worst = 0.0
    for _ in range(trials):
        x = man.random_point(rng)
        u = _unit_tangent(man, x, rng)
        v = _unit_tangent(man, x, rng)
        ii = man.second_fundamental_form(x, u, v)
        worst = max(worst, man.norm(man.project(x, ii)))
    return worst


def check_ii_fd_agreement(man, trials, rng):
    worst = 0.0
    for _ in range(trials):
        x = man.random_point(rng)
        u = _unit_tangent(man, x, rng)
        v = _unit_tangent(man, x, rng)
        ii = man.second_fundamental_form(x, u, v)
        fd = fd_projector_differential(man, x, u, v)
        worst = max(worst, man.norm(ii - fd) / (1.0 + man.norm(fd)))
    return worst


def _observed_order(errs, steps):
    errs = np.asarray(errs)
    if errs.max(initial=0.0) < 1e-14:
        return np.inf  # exact retraction: defect at rounding level
    return float(np.polyfit(np.log(steps), np.log(np.maximum(errs, 1e-300)), 1)[0])


def check_retraction_order(man, trials, rng):
    steps = (1e-3, 5e-4, 2.5e-4)
    worst = np.inf
    for _ in range(trials):
        x = man.random_point(rng)
        v = _unit_tangent(man, x, rng)
        for kind in man.retraction_kinds:
            errs = [man.norm(man.retract(x, t * v, kind) - x - t * v) for t in steps]
            worst = min(worst, _observed_order(errs, steps))
    return worst


def _random_state(man, rng, k_range=(1, 3)):
    d = man.dim
    k = int(rng.integers(k_range[0], min(k_range[1], d - 1) + 1))
    x = man.random_point(rng)
    cols = [man.random_tangent(x, rng) for _ in range(k)]
    return BundleState.from_columns(man, x, cols)


def check_bundle_retraction_order(man, trials, rng):
    steps = (1e-3, 5e-4, 2.5e-4)
    worst = np.inf
    for _ in range(trials):
        st = _random_state(man, rng)
        basis = bundle_tangent_basis(st)
        horiz = basis[int(rng.integers(0, man.dim))]
        vert = basis[int(rng.integers(man.dim, len(basis)))] if len(basis) > man.dim else None
        big = horiz.big + (vert.big if vert is not None else 0.0)
        direction = BundleDirection(st, horiz.delta, big, check=False)
        p0 = st.plane_projector()
        dplane = direction.big
        errs = []
        for t in steps:
            nxt = bundle_retract(st, direction, t)
            e_x = np.linalg.norm(
                man.flatten(nxt.x) - man.flatten(st.x) - t * man.flatten(direction.delta)
            )
            e_p = np.linalg.norm(nxt.plane_projector() - p0 - t * dplane)
            errs.append(e_x + e_p)
        worst = min(worst, _observed_order(errs, steps))
    return worst


def check_sasaki_orthonormality(man, trials, rng):
    worst = 0.0
    for _ in range(trials):
        st = _random_state(man, rng)
        basis = bundle_tangent_basis(st)
        m = len(basis)
        gram = np.empty((m, m))
        for i in range(m):
            for j in range(i + 1):
                gram[i, j] = gram[j, i] = sasaki_inner(basis[i], basis[j])
        worst = max(worst, np.abs(gram - np.eye(m)).max())
    return worst


def check_gauge_invariance(man, trials, rng):
    """Plane advance depends only on span(W): W and WQ give equal projectors."""
    worst = 0.0
    for _ in range(trials):
        st = _random_state(man, rng)
        k = st.k
        w = st.frame
        q, _ = np.linalg.qr(rng.standard_normal((k, k)))
        z = np.stack(
            [man.flatten(man.random_tangent(st.x, rng)) for _ in range(k)], axis=1
        )
        z -= w @ (w.T @ z)
        x_new = man.retract(st.x, 0.05 * man.random_tangent(st.x, rng))
        for mode in ("linear", "geodesic"):
            for variant in ("projector", "representative"):
                w1 = advance_plane(man, x_new, w, 0.1 * z, mode, variant)
                w2 = advance_plane(man, x_new, w @ q, 0.1 * (z @ q), mode, variant)
                dev = np.abs(w1 @ w1.T - w2 @ w2.T).max()
                worst = max(worst, dev)
    return worst


def check_hessian_symmetry(man, trials, rng):
    obj = _poly_objective(man)
    worst = 0.0
    for _ in range(trials):
        x = man.random_point(rng)
        u = _unit_tangent(man, x, rng)
        v = _unit_tangent(man, x, rng)
        hu = riemannian_hessian_vec(obj, man, x, u)
        hv = riemannian_hessian_vec(obj, man, x, v)
        scale = 1.0 + man.norm(hu) + man.norm(hv)
        worst = max(worst, abs(man.inner(hu, v) - man.inner(u, hv)) / scale)
    return worst


_FULL_CHECKS = {
    "projection_idempotency": check_projection_idempotency,
    "ii_normality": check_ii_normality,
    "ii_fd_agreement": check_ii_fd_agreement,
    "retraction_order": check_retraction_order,
    "bundle_retraction_order": check_bundle_retraction_order,
    "sasaki_orthonormality": check_sasaki_orthonormality,
    "gauge_invariance": check_gauge_invariance,
    "hessian_symmetry": check_hessian_symmetry,
}

_II_CHECKS = ("projection_idempotency", "ii_normality", "ii_fd_agreement")


def _outcome(name, man, trials, worst):
    if name.endswith("_order"):
        return CheckOutcome(name, man.name, trials, worst, BOUNDS[name], ">=", worst >= BOUNDS[name])
    return CheckOutcome(name, man.name, trials, worst, BOUNDS[name], "<=", worst <= BOUNDS[name])


def run_property_checks(trials: int = 1000, seed: int = 0) -> list[CheckOutcome]:
    """Run the full suite; deterministic for a given (trials, seed)."""
    outcomes = []
    for mi, man in enumerate(FULL_MANIFOLDS):
        for ci, (name, fn) in enumerate(_FULL_CHECKS.items()):
            rng = np.random.default_rng([seed, mi, ci])
            outcomes.append(_outcome(name, man, trials, fn(man, trials, rng)))
    for mi, man in enumerate(II_ONLY_MANIFOLDS):
        for ci, name in enumerate(_II_CHECKS):
            rng = np.random.default_rng([seed, 100 + mi, ci])
            outcomes.append(_outcome(name, man, trials, _FULL_CHECKS[name](man, trials, rng)))
    return outcomes
