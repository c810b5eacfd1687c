"""Reflected-gradient dynamics for index-k stationary points.

The iterate is a point x on a manifold together with a k-plane inside the
tangent space at x, stored as an orthonormal frame W. Each step moves x
against the gradient reflected through the plane,

    d_x = -(g - 2 W W^T g),

and rotates the plane toward the k most unstable Hessian directions. With
Z = (I - W W^T) H W the plane direction is d_P = -(W Z^T + Z W^T), realized
on the frame as the block update W <- W - eta Z followed by the retraction
repair, so no dense plane operator is ever formed. The plane residual uses
|d_P|_F = sqrt(2) |Z|_F.

Residual bookkeeping: both channels record an infinite sentinel before the
first direction is computed, 1 at the first direction, and then the norm
ratio against the first direction. A zero first norm maps later ratios to 0
when the numerator is (numerically) zero and to infinity otherwise. With
k = 0 the plane channel is identically zero and the dynamics reduce to
gradient descent; with k = dim it is pure ascent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .bundle import BundleState, advance_plane
from .errors import (
    Degenerate,
    InsufficientData,
    InvalidInput,
    RetractionDomain,
)
from .manifolds import (
    Manifold,
    compressed_hessian,
    riemannian_gradient,
    riemannian_hessian_vec,
)
from .objectives import Objective

_RETRACTIONS = {"simple": "linear", "bundle": "geodesic"}
_VARIANTS = ("projector", "representative")


@dataclass(frozen=True)
class SolverConfig:
    """Step sizes and stopping policy for the saddle dynamics.

    eta_plane defaults to eta_x. maxit of None removes the iteration cap.
    k is optional cross-validation against the initial plane dimension.
    """

    eta_x: float
    eta_plane: float | None = None
    k: int | None = None
    maxit: int | None = 10_000
    tol: float = 1e-8
    retraction: str = "simple"
    variant: str = "projector"
    position_kind: str | None = None
    hessian_route: str = "auto"

    def __post_init__(self):
        if not (np.isfinite(self.eta_x) and self.eta_x > 0):
            raise InvalidInput(f"eta_x must be positive, got {self.eta_x}")
        if self.eta_plane is not None and not (
            np.isfinite(self.eta_plane) and self.eta_plane > 0
        ):
            raise InvalidInput(f"eta_plane must be positive, got {self.eta_plane}")
        if self.k is not None and self.k < 0:
            raise InvalidInput("k must be nonnegative")
        if self.maxit is not None and self.maxit < 0:
            raise InvalidInput("maxit must be nonnegative or None")
        if not self.tol > 0:
            raise InvalidInput("tol must be positive")
        if self.retraction not in _RETRACTIONS:
            raise InvalidInput(f"unknown retraction route {self.retraction!r}")
        if self.variant not in _VARIANTS:
            raise InvalidInput(f"unknown plane variant {self.variant!r}")

    @property
    def plane_step(self) -> float:
        return self.eta_x if self.eta_plane is None else self.eta_plane


@dataclass(frozen=True)
class RunRecord:
    """Terminal state and convergence history of one solver run."""

    state: BundleState
    iterations: int
    converged: bool
    r_x: np.ndarray
    r_plane: np.ndarray
    value: float
    failure: str | None = None
    spectrum: np.ndarray | None = None
    index: int | None = None
    degenerate: int | None = None


def x_direction(objective: Objective, manifold: Manifold, x, frame: np.ndarray):
    """Negative gradient reflected through the plane, as an ambient element."""
    g = manifold.flatten(riemannian_gradient(objective, manifold, x))
    if frame.shape[1]:
        g = g - 2.0 * (frame @ (frame.T @ g))
    return manifold.unflatten(-g)


def _plane_block(objective, manifold, x, frame, route):
    """Z = (I - W W^T) H W, columns in flattened coordinates."""
    size, k = frame.shape
    if k >= manifold.dim:
        # W spans the whole tangent space, so (I - W W^T) H W = 0 exactly;
        # computing it in floats would leave noise that never contracts.
        return np.zeros((size, k))
    hw = np.empty((size, k))
    for j in range(k):
        v = manifold.unflatten(frame[:, j])
        hw[:, j] = manifold.flatten(
            riemannian_hessian_vec(objective, manifold, x, v, route=route)
        )
    if k:
        hw -= frame @ (frame.T @ hw)
    return hw

def p_direction(objective, manifold, x, frame, route: str = "auto") -> np.ndarray:
    """Dense plane direction -(W Z^T + Z W^T) on the flattened ambient space."""
    z = _plane_block(objective, manifold, x, frame, route)
    d = frame @ z.T
    return -(d + d.T)


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num <= 1e-30 else np.inf
    return num / den


def classify(objective, manifold, x, route: str = "auto"):
    """Spectrum of the compressed Hessian, Morse index, and near-zero count.

    Eigenvalues within INDEX_TOL_REL of the spectral radius count as zero.
    """
    h, _ = compressed_hessian(objective, manifold, x, route=route)
    evals = np.linalg.eigvalsh(h)
    thr = tol.INDEX_TOL_REL * max(1e-12, float(np.abs(evals).max(initial=0.0)))
    index = int(np.count_nonzero(evals < -thr))
    n_zero = int(np.count_nonzero(np.abs(evals) <= thr))
    return evals, index, n_zero


def solve(
    objective: Objective,
    state0: BundleState,
    config: SolverConfig,
    classify_terminal: bool = False,
) -> RunRecord:
    """Run the reflected-gradient dynamics from an initial bundle state.

    Returns a record rather than raising on failed runs: non-finite iterates
    mark the record 'diverged', a retraction leaving its domain marks it
    'retraction_domain'; converged is False in both cases.
    """
    m = state0.manifold
    x = np.array(state0.x, dtype=float)
    w = np.array(state0.frame, dtype=float)
    k = w.shape[1]
    if config.k is not None and config.k != k:
        raise InvalidInput(f"config.k={config.k} but initial plane has k={k}")
    mode = _RETRACTIONS[config.retraction]
    eta_p = config.plane_step

    rx_hist = [np.inf]
    rp_hist = [np.inf]
    n0x = n0p = None
    t = 0
    converged = False
    failure = None

    while True:
        g = m.flatten(riemannian_gradient(objective, m, x))
        dx = -(g - 2.0 * (w @ (w.T @ g))) if k else -g
        z = _plane_block(objective, m, x, w, config.hessian_route)
        ndx = float(np.linalg.norm(dx))
        ndp = float(np.sqrt(2.0) * np.linalg.norm(z))
        if not (np.isfinite(ndx) and np.isfinite(ndp)):
            failure = "diverged"
            break
        if n0x is None:
            n0x, n0p = ndx, ndp
            rx = 1.0
            rp = 1.0 if k else 0.0
        else:
            rx = _ratio(ndx, n0x)
            rp = _ratio(ndp, n0p) if k else 0.0
        rx_hist.append(rx)
        rp_hist.append(rp)
        if max(rx, rp) <= config.tol:
            converged = True
            break
        if config.maxit is not None and t >= config.maxit:
            break
        try:
            x_new = m.retract(x, m.unflatten(config.eta_x * dx), config.position_kind)
            w = advance_plane(m, x_new, w, -eta_p * z, mode=mode, variant=config.variant)
        except RetractionDomain:
            failure = "retraction_domain"
            break
        x = x_new
        t += 1

    state = BundleState(m, x, w)
    with np.errstate(all="ignore"):
        value = float(objective.value(x))
    spectrum = index = n_zero = None
    if classify_terminal and failure is None:
        spectrum, index, n_zero = classify(objective, m, x, route=config.hessian_route)
    return RunRecord(
        state=state,
        iterations=t,
        converged=converged,
        r_x=np.asarray(rx_hist),
        r_plane=np.asarray(rp_hist),
        value=value,
        failure=failure,
        spectrum=spectrum,
        index=index,
        degenerate=n_zero,
    )


@dataclass(frozen=True)
class RateReport:
    """Linearized convergence rates of the dynamics at an index-k point.

    The position channel sees the reflected spectrum (signs of the lowest k
    eigenvalues flipped); the plane channel sees the difference spectrum
    between retained and discarded eigenvalues. Plane fields are None when
    k is 0 or the full dimension.
    """

    k: int
    spectrum: np.ndarray
    lam_min_star: float
    lam_max_star: float
    eta_x_star: float
    kappa_x: float
    eta_x: float
    q1: float
    gap_adjacent: float | None
    gap_span: float | None
    eta_plane_star: float | None
    kappa_plane: float | None
    eta_plane: float | None
    q2: float | None

    @property
    def q(self) -> float:
        return self.q1 if self.q2 is None else max(self.q1, self.q2)


def rate_report(
    spectrum,
    k: int,
    eta_x: float | None = None,
    eta_plane: float | None = None,
) -> RateReport:
    """Step-size and rate analysis from a stationary-point Hessian spectrum.

    Rates q1, q2 are evaluated at the supplied step sizes, defaulting to the
    optimal ones. Raises Degenerate when the spectrum does not describe a
    strict index-k point (lam_k < 0 < lam_{k+1} up to the boundary cases).
    """
    lam = np.sort(np.asarray(spectrum, dtype=float).ravel())
    d = lam.size
    if d == 0:
        raise InvalidInput("empty spectrum")
    if not 0 <= k <= d:
        raise InvalidInput(f"k={k} outside 0..{d}")
    if k >= 1 and not lam[k - 1] < 0:
        raise Degenerate(f"eigenvalue {k} is {lam[k - 1]:.3e}, expected < 0")
    if k <= d - 1 and not lam[k] > 0:
        raise Degenerate(f"eigenvalue {k + 1} is {lam[k]:.3e}, expected > 0")

    reflected = np.concatenate([-lam[:k], lam[k:]])
    lam_min_star = float(reflected.min())
    lam_max_star = float(reflected.max())
    eta_x_star = 2.0 / (lam_min_star + lam_max_star)
    kappa_x = lam_max_star / lam_min_star
    ex = eta_x_star if eta_x is None else float(eta_x)
    q1 = max(abs(1.0 - ex * lam_min_star), abs(1.0 - ex * lam_max_star))

    if 1 <= k <= d - 1:
        gap_adjacent = float(lam[k] - lam[k - 1])
        gap_span = float(lam[d - 1] - lam[0])
        eta_plane_star = 2.0 / (gap_adjacent + gap_span)
        kappa_plane = gap_span / gap_adjacent
        ep = eta_plane_star if eta_plane is None else float(eta_plane)
        q2 = max(abs(1.0 - ep * gap_adjacent), abs(1.0 - ep * gap_span))
    else:
        gap_adjacent = gap_span = eta_plane_star = kappa_plane = ep = q2 = None

    return RateReport(
        k=k,
        spectrum=lam,
        lam_min_star=lam_min_star,
        lam_max_star=lam_max_star,
        eta_x_star=eta_x_star,
        kappa_x=kappa_x,
        eta_x=ex,
        q1=q1,
        gap_adjacent=gap_adjacent,
        gap_span=gap_span,
        eta_plane_star=eta_plane_star,
        kappa_plane=kappa_plane,
        eta_plane=ep,
        q2=q2,
    )


def measure_rate(record: RunRecord, window: int = 50) -> float:
    """Empirical contraction factor from the tail of the residual history.

    Fits a least-squares line to log max(r_x, r_plane) over the last
    `window` usable entries (finite and positive) and returns exp(slope).
    """
    if window < 2:
        raise InvalidInput("window must be at least 2")
    r = np.maximum(record.r_x, record.r_plane)[1:]
    r = r[np.isfinite(r) & (r > 0.0)]
    if r.size < window:
        raise InsufficientData(
            f"need {window} usable residuals, history has {r.size}"
        )
    y = np.log(r[-window:])
    slope = np.polyfit(np.arange(window), y, 1)[0]
    return float(np.exp(slope))
