"""States and tangent calculus on the bundle of k-planes over a manifold.

A bundle state pairs a point x on a manifold M with a k-dimensional plane
inside T_x M. The plane is stored as an orthonormal frame of flattened
tangent vectors (ambient_size x k); its rank-k projector W W^T is formed on
demand only, so large instances never materialize ambient_size^2 operators.

A bundle tangent at (x, P) is a pair (delta, Delta): delta in T_x M and
Delta a symmetric operator satisfying

    Delta = Proj o Delta o Proj + extended_ii(delta, P),

where extended_ii couples the plane to the base motion through the second
fundamental form. The metric is the product of the base metric with the
Frobenius inner product of the plane components Proj o Delta o Proj.

Retraction of the plane happens in two stages shared by all routes: move the
frame (linearly for the transport route, along the fiber geodesic for the
bundle route), then push into the new tangent space and repair, either by
re-orthonormalizing the pushed frame (representative variant) or by spectral
truncation of the pushed plane operator (projector variant).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol
from .errors import BaseMismatch, InvalidInput, NotTangent, RetractionDomain
from .linalg import qr_positive
from .manifolds import Manifold


def _project_columns(manifold: Manifold, x: np.ndarray, cols: np.ndarray) -> np.ndarray:
    k = cols.shape[1]
    stack = np.ascontiguousarray(cols.T).reshape((k, *manifold.ambient_shape))
    out = manifold.project_stack(x, stack)
    return np.ascontiguousarray(out.reshape(k, -1).T)


@dataclass(frozen=True)
class BundleState:
    """Point x on `manifold` plus an orthonormal k-frame of tangent vectors."""

    manifold: Manifold
    x: np.ndarray
    frame: np.ndarray  # (ambient_size, k), flattened tangent columns

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=float)
        if f.ndim != 2 or f.shape[0] != self.manifold.ambient_size:
            raise InvalidInput(f"frame shape {f.shape} != ({self.manifold.ambient_size}, k)")
        object.__setattr__(self, "frame", f)

    @property
    def k(self) -> int:
        return self.frame.shape[1]

    def plane_projector(self) -> np.ndarray:
        """Dense rank-k projector on the flattened ambient space."""
        return self.frame @ self.frame.T

    def frame_columns(self) -> list[np.ndarray]:
        return [self.manifold.unflatten(self.frame[:, j]) for j in range(self.k)]

    def base_tangent_basis(self) -> np.ndarray:
        """Tangent basis of the manifold at x, computed once per state."""
        cached = getattr(self, "_tbasis", None)
        if cached is None:
            cached = self.manifold.tangent_basis(self.x)
            object.__setattr__(self, "_tbasis", cached)
        return cached

    def validate(self) -> None:
        self.manifold.check_point(self.x)
        k = self.k
        gram = self.frame.T @ self.frame
        if np.abs(gram - np.eye(k)).max(initial=0.0) > tol.FRAME_ORTHO_TOL:
            raise InvalidInput("plane frame is not orthonormal")
        for j in range(k):
            v = self.manifold.unflatten(self.frame[:, j])
            r = self.manifold.norm(v - self.manifold.project(self.x, v))
            if r > tol.PLANE_RANGE_TOL:
                raise NotTangent(f"plane column {j} leaves the tangent space ({r:.3e})")

    @classmethod
    def from_columns(cls, manifold: Manifold, x, columns) -> "BundleState":
        """Build from tangent vectors (ambient elements); orthonormalizes."""
        cols = [manifold.flatten(manifold.project(x, c)) for c in columns]
        w = np.stack(cols, axis=1) if cols else np.empty((manifold.ambient_size, 0))
        if w.shape[1]:
            q, r = qr_positive(w)
            d = np.abs(np.diag(r))
            if d.min(initial=np.inf) <= tol.QR_RANK_REL * max(1.0, d.max(initial=0.0)):
                raise InvalidInput("plane columns are linearly dependent")
            w = q
        s = cls(manifold, np.asarray(x, dtype=float), w)
        s.validate()
        return s

    @classmethod
    def from_projector(cls, manifold: Manifold, x, plane: np.ndarray, k: int) -> "BundleState":
        """Build from a dense plane projector via its top-k eigenvectors."""
        p = 0.5 * (plane + plane.T)
        if np.abs(p @ p - p).max(initial=0.0) > tol.PROJECTOR_TOL:
            raise InvalidInput("plane operator is not idempotent")
        if abs(np.trace(p) - k) > tol.PROJECTOR_TOL * max(1, p.shape[0]):
            raise InvalidInput("plane operator trace does not equal k")
        _, vecs = np.linalg.eigh(p)
        s = cls(manifold, np.asarray(x, dtype=float), vecs[:, p.shape[0] - k:])
        s.validate()
        return s


@dataclass(frozen=True)
class BundleDirection:
    """Tangent (delta, Delta) to the bundle at `state`."""

    state: BundleState
    delta: np.ndarray       # ambient element, tangent at state.x
    big: np.ndarray         # (ambient_size, ambient_size), symmetric
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        m = self.state.manifold
        big = np.asarray(self.big, dtype=float)
        if big.shape != (m.ambient_size, m.ambient_size):
            raise InvalidInput(f"plane component shape {big.shape}")
        object.__setattr__(self, "big", 0.5 * (big + big.T))
        if self.check:
            m.check_tangent(self.state.x, self.delta)
            recon = self.plane_part() + extended_ii(m, self.state.x, self.delta, self.state.frame)
            r = np.linalg.norm(self.big - recon)
            if r > tol.BUNDLE_TANGENT_TOL * (1.0 + np.linalg.norm(self.big)):
                raise NotTangent(f"bundle direction tangency residual {r:.3e}")

    def plane_part(self) -> np.ndarray:
        """Proj o Delta o Proj: the metrically visible plane component."""
        m, x = self.state.manifold, self.state.x
        half = _project_columns(m, x, self.big)
        return _project_columns(m, x, half.T)


def extended_ii(manifold: Manifold, x, u, frame: np.ndarray) -> np.ndarray:
    """Coupling operator sum_l II(u, w_l) w_l^T + w_l II(u, w_l)^T."""
    size, k = frame.shape
    out = np.zeros((size, size))
    for j in range(k):
        w = manifold.unflatten(frame[:, j])
        ii = manifold.flatten(manifold.second_fundamental_form(x, u, w))
        out += np.outer(ii, frame[:, j])
    return out + out.T


def sasaki_inner(d1: BundleDirection, d2: BundleDirection) -> float:
    """Product metric: base inner product plus Frobenius of plane parts."""
    s1, s2 = d1.state, d2.state
    if s1 is not s2 and not (
        np.array_equal(s1.x, s2.x) and np.array_equal(s1.frame, s2.frame)
    ):
        raise BaseMismatch("directions anchored at different bundle states")
    b = s1.base_tangent_basis()
    m1 = b.T @ d1.big @ b
    m2 = b.T @ d2.big @ b
    return s1.manifold.inner(d1.delta, d2.delta) + float(np.vdot(m1, m2))


def bundle_tangent_basis(state: BundleState) -> list[BundleDirection]:
    """Orthonormal basis of the bundle tangent space: d horizontal directions
    (v_q, extended_ii(v_q, P)) followed by k(d-k) vertical plane rotations."""
    m, x, w = state.manifold, state.x, state.frame
    b = state.base_tangent_basis()
    d, k = b.shape[1], state.k
    out: list[BundleDirection] = []
    for q in range(d):
        v = m.unflatten(b[:, q])
        out.append(BundleDirection(state, v, extended_ii(m, x, v, w), check=False))
    if k:
        coord = b.T @ w                      # (d, k), orthonormal columns
        q, _ = np.linalg.qr(coord, mode="complete")
        w_perp = b @ q[:, k:]                # tangent completion of the plane
        zero = np.zeros(m.ambient_shape)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for i in range(k):
            for j in range(d - k):
                rot = np.outer(w[:, i], w_perp[:, j])
                out.append(BundleDirection(state, zero, (rot + rot.T) * inv_sqrt2, check=False))
    return out


def horizontal_lift(direction: BundleDirection) -> tuple[np.ndarray, np.ndarray]:
    """Frame representative of a bundle tangent: (delta, Delta W)."""
    return direction.delta, direction.big @ direction.state.frame


# -- retractions ---------------------------------------------------------------


def geodesic_frame(w: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Endpoint frame of the plane geodesic from span(w) with direction block s.

    Requires w^T s = 0. With s = U diag(sig) V^T over all k columns, the
    endpoint is (w V) cos(sig) V^T + U sin(sig) V^T; zero singular values fix
    the untouched directions automatically.
    """
    if s.shape[1] == 0:
        return w.copy()
    u, sig, vh = np.linalg.svd(s, full_matrices=False)
    v = vh.T
    return (w @ v) * np.cos(sig) @ vh + (u * np.sin(sig)) @ vh


def advance_plane(
    manifold: Manifold,
    x_new: np.ndarray,
    w: np.ndarray,
    step_block: np.ndarray,
    mode: str,
    variant: str,
) -> np.ndarray:
    """Move plane frame w by the tangent block step_block, land at x_new.

    step_block is the already-scaled direction in frame coordinates
    (columns tangent at the old point, w^T step_block = 0). mode 'linear'
    takes a straight candidate, mode 'geodesic' the fiber geodesic. variant
    'representative' re-orthonormalizes the pushed frame; 'projector'
    spectrally truncates the pushed plane operator. Raises RetractionDomain
    when the pushed plane loses rank.
    """
    k = w.shape[1]
    if k == 0:
        return w.copy()
    if mode == "geodesic":
        cand = geodesic_frame(w, step_block)
        y = _project_columns(manifold, x_new, cand)
        if variant == "representative":
            return _orth_or_raise(y)
        u, sig, _ = np.linalg.svd(y, full_matrices=False)
        if sig[k - 1] <= tol.EIG_RANK_REL * max(1.0, sig[0]):
            raise RetractionDomain("plane lost rank under projection")
        return u[:, :k]
    if mode != "linear":
        raise InvalidInput(f"unknown plane transport mode {mode!r}")
    if variant == "representative":
        y = _project_columns(manifold, x_new, w + step_block)
        return _orth_or_raise(y)
    # projector variant: truncate Proj(P + w s^T + s w^T)Proj without forming
    # dense operators: columns [w, s] with middle matrix [[I, I], [I, 0]].
    b = np.concatenate([w, step_block], axis=1)
    mid = np.zeros((2 * k, 2 * k))
    mid[:k, :k] = np.eye(k)
    mid[:k, k:] = np.eye(k)
    mid[k:, :k] = np.eye(k)
    by = _project_columns(manifold, x_new, b)
    q, r = np.linalg.qr(by)
    small = r @ mid @ r.T
    evals, evecs = np.linalg.eigh(0.5 * (small + small.T))
    order = np.argsort(evals)[::-1]
    if evals[order[k - 1]] <= tol.EIG_RANK_REL * max(1.0, abs(evals[order[0]])):
        raise RetractionDomain("plane lost rank under truncation")
    return _orth_or_raise(q @ evecs[:, order[:k]])


def _orth_or_raise(cols: np.ndarray) -> np.ndarray:
    q, r = qr_positive(cols)
    d = np.abs(np.diag(r))
    if d.min(initial=np.inf) <= tol.QR_RANK_REL * max(1.0, d.max(initial=0.0)):
        raise RetractionDomain("plane frame collapsed during retraction")
    return q


def _plane_step(state: BundleState, direction: BundleDirection, step: float) -> np.ndarray:
    """Vertical block of a bundle direction in frame coordinates.

    Only Proj o Delta o Proj moves the plane, so the columns of Delta W are
    projected to the tangent space; the residual frame component is removed
    for hygiene (it vanishes for exact bundle tangents).
    """
    g = _project_columns(state.manifold, state.x, direction.big @ state.frame)
    g = g - state.frame @ (state.frame.T @ g)
    return step * g


def bundle_retract(
    state: BundleState,
    direction: BundleDirection,
    step: float = 1.0,
    kind: str | None = None,
    variant: str = "projector",
) -> BundleState:
    """Geodesic-style bundle retraction: base retraction for x, fiber
    geodesic for the plane, then projection to the new tangent space."""
    m = state.manifold
    x_new = m.retract(state.x, step * direction.delta, kind)
    w_new = advance_plane(m, x_new, state.frame, _plane_step(state, direction, step),
                          mode="geodesic", variant=variant)
    return BundleState(m, x_new, w_new)


def simple_transport_retract(
    state: BundleState,
    direction: BundleDirection,
    step: float = 1.0,
    kind: str | None = None,
    variant: str = "projector",
) -> BundleState:
    """Forward-Euler transport: linear plane candidate, then projection."""
    m = state.manifold
    x_new = m.retract(state.x, step * direction.delta, kind)
    w_new = advance_plane(m, x_new, state.frame, _plane_step(state, direction, step),
                          mode="linear", variant=variant)
    return BundleState(m, x_new, w_new)
