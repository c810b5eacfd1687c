"""Embedded submanifolds: tangent calculus, curvature terms, retractions.

Every manifold here is a Riemannian submanifold of a Euclidean matrix or
vector space with the inherited metric. The one nonstandard primitive is
``projector_differential``: the derivative, along a tangent direction, of the
field of orthogonal tangent-space projectors, applied to an arbitrary ambient
element. Its normal part on tangent inputs is the second fundamental form;
its tangent part on normal inputs is the Weingarten correction that turns
Euclidean second derivatives into Riemannian ones. Implementing the one
primitive per manifold keeps both uses in exact agreement.

Conventions:
  * points and ambient elements are plain float ndarrays of the manifold's
    ambient shape; ``flatten``/``unflatten`` map to coordinate vectors;
  * the ambient inner product is the Euclidean/Frobenius dot product;
  * retractions take an already-tangent direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import tolerances as tol
from .errors import (
    InfeasiblePoint,
    InvalidInput,
    MissingCapability,
    NotTangent,
    RegularityViolation,
    RetractionDomain,
)
from .linalg import qr_positive


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


class Manifold:
    """Base class; subclasses fill in the geometry."""

    name: str = "manifold"
    ambient_shape: tuple[int, ...] = ()
    dim: int = 0
    retraction_kinds: tuple[str, ...] = ()
    default_retraction: str = ""

    # -- ambient bookkeeping -------------------------------------------------

    @property
    def ambient_size(self) -> int:
        cached = getattr(self, "_ambient_size", None)
        if cached is None:
            cached = int(np.prod(self.ambient_shape))
            self._ambient_size = cached
        return cached

    def flatten(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a, dtype=float).reshape(self.ambient_size)

    def unflatten(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec, dtype=float).reshape(self.ambient_shape)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.vdot(np.asarray(a, float), np.asarray(b, float)))

    def norm(self, a: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(a, float)))

    # -- feasibility ---------------------------------------------------------

    def feasibility_residual(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def check_point(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != self.ambient_shape:
            raise InvalidInput(f"{self.name}: point shape {x.shape} != {self.ambient_shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput(f"{self.name}: point has non-finite entries")
        r = self.feasibility_residual(x)
        if r > tol.FEASIBILITY_TOL * (1.0 + self.norm(x)):
            raise InfeasiblePoint(f"{self.name}: feasibility residual {r:.3e}")

    def check_tangent(self, x: np.ndarray, v: np.ndarray) -> None:
        r = self.norm(v - self.project(x, v))
        if r > tol.TANGENT_TOL * (1.0 + self.norm(v)):
            raise NotTangent(f"{self.name}: tangency residual {r:.3e}")

    # -- tangent calculus ----------------------------------------------------

    def project(self, x: np.ndarray, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project_stack(self, x: np.ndarray, stack: np.ndarray) -> np.ndarray:
        """Tangent-project each slice of a (m, *ambient_shape) stack."""
        return np.stack([self.project(x, a) for a in stack])

    def projector_differential(self, x: np.ndarray, u: np.ndarray, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def second_fundamental_form(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """II_x(u, v): normal-valued, symmetric in (u, v)."""
        return self.projector_differential(x, u, v)

    def weingarten(self, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Tangent-valued derivative term for a normal field w along u."""
        return self.project(x, self.projector_differential(x, u, w))

    # -- retraction ----------------------------------------------------------

    def retract(self, x: np.ndarray, v: np.ndarray, kind: str | None = None) -> np.ndarray:
        kind = kind or self.default_retraction
        if kind not in self.retraction_kinds:
            raise InvalidInput(f"{self.name}: unknown retraction kind {kind!r}")
        return self._retract(x, v, kind)

    def _retract(self, x: np.ndarray, v: np.ndarray, kind: str) -> np.ndarray:
        raise NotImplementedError

    # -- bases and randomness ------------------------------------------------

    def tangent_basis(self, x: np.ndarray) -> np.ndarray:
        """Orthonormal basis of T_x M, flattened: (ambient_size, dim)."""
        raise NotImplementedError

    def projection_matrix(self, x: np.ndarray) -> np.ndarray:
        b = self.tangent_basis(x)
        return b @ b.T

    def random_ambient(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.ambient_shape)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def random_tangent(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.project(x, self.random_ambient(rng))

    def __repr__(self) -> str:
        return self.name


class Flat(Manifold):
    """The Euclidean space itself; every curvature term vanishes."""

    retraction_kinds = ("linear",)
    default_retraction = "linear"

    def __init__(self, shape: int | tuple[int, ...]):
        self.ambient_shape = (shape,) if isinstance(shape, int) else tuple(shape)
        self.dim = self.ambient_size
        self.name = f"flat{self.ambient_shape}"

    def feasibility_residual(self, x):
        return 0.0

    def project(self, x, a):
        return np.array(a, dtype=float)

    def projector_differential(self, x, u, a):
        return np.zeros(self.ambient_shape)

    def _retract(self, x, v, kind):
        return x + v

    def tangent_basis(self, x):
        return np.eye(self.ambient_size)

    def random_point(self, rng):
        return rng.standard_normal(self.ambient_shape)


class Sphere(Manifold):
    """Unit sphere in R^n."""

    retraction_kinds = ("normalize", "exp")
    default_retraction = "normalize"

    def __init__(self, n: int):
        if n < 2:
            raise InvalidInput("Sphere needs n >= 2")
        self.n = n
        self.ambient_shape = (n,)
        self.dim = n - 1
        self.name = f"sphere({n})"

    def feasibility_residual(self, x):
        return abs(np.linalg.norm(x) - 1.0)

    def project(self, x, a):
        return a - np.dot(x, a) * x

    def projector_differential(self, x, u, a):
        return -np.dot(u, a) * x - np.dot(x, a) * u

    def second_fundamental_form(self, x, u, v):
        return -np.dot(u, v) * x

    def _retract(self, x, v, kind):
        if kind == "normalize":
            y = x + v
            nrm = np.linalg.norm(y)
            if nrm <= tol.SVD_RANK_REL:
                raise RetractionDomain("sphere: step passes through the origin")
            return y / nrm
        t = np.linalg.norm(v)
        if t == 0.0:
            return x.copy()
        return np.cos(t) * x + np.sin(t) * (v / t)

    def tangent_basis(self, x):
        q, _ = np.linalg.qr(x[:, None], mode="complete")
        b = q[:, 1:]
        # complete QR may flip the first column relative to x; columns 1..n-1
        # are orthogonal to x either way.
        return b

    def random_point(self, rng):
        v = rng.standard_normal(self.n)
        return v / np.linalg.norm(v)


class Stiefel(Manifold):
    """Orthonormal p-frames in R^n (n x p matrices, X^T X = I)."""

    retraction_kinds = ("qr",)
    default_retraction = "qr"

    def __init__(self, n: int, p: int):
        if not 1 <= p <= n:
            raise InvalidInput("Stiefel needs 1 <= p <= n")
        self.n, self.p = n, p
        self.ambient_shape = (n, p)
        self.dim = n * p - p * (p + 1) // 2
        self.name = f"stiefel({n},{p})"

    def feasibility_residual(self, x):
        return float(np.linalg.norm(x.T @ x - np.eye(self.p)))

    def project(self, x, a):
        return a - x @ _sym(x.T @ a)

    def projector_differential(self, x, u, a):
        return -u @ _sym(x.T @ a) - x @ _sym(u.T @ a)

    def second_fundamental_form(self, x, u, v):
        return -x @ _sym(u.T @ v)

    def _retract(self, x, v, kind):
        q, r = qr_positive(x + v)
        d = np.abs(np.diag(r))
        if d.min(initial=np.inf) <= tol.QR_RANK_REL * max(1.0, d.max(initial=0.0)):
            raise RetractionDomain("stiefel: QR retraction hit a rank collapse")
        return q

    def complement(self, x: np.ndarray) -> np.ndarray:
        q, _ = np.linalg.qr(x, mode="complete")
        return q[:, self.p:]

    def tangent_basis(self, x):
        n, p = self.n, self.p
        xc = self.complement(x)
        cols = np.empty((n * p, self.dim))
        m = 0
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for i in range(p):
            for j in range(i + 1, p):
                w = np.zeros((p, p))
                w[i, j], w[j, i] = 1.0, -1.0
                cols[:, m] = (x @ w).reshape(-1) * inv_sqrt2
                m += 1
        for a in range(n - p):
            for i in range(p):
                e = np.outer(xc[:, a], np.eye(p)[i])
                cols[:, m] = e.reshape(-1)
                m += 1
        return cols

    def random_point(self, rng):
        q, _ = qr_positive(rng.standard_normal((self.n, self.p)))
        return q


class GrassmannProjector(Manifold):
    """Rank-p orthogonal projectors on R^n (p-planes, projector coordinates).

    Ambient space: n x n matrices with the Frobenius metric; tangent vectors
    are the symmetric matrices G with GP + PG = G. Tangent projection is the
    double commutator [P, [P, sym(A)]], the second fundamental form is
    [D, [P, G]], and the default retraction is the geodesic (exponential) map
    computed through an eigenvector frame of the base projector.
    """

    retraction_kinds = ("exp",)
    default_retraction = "exp"

    def __init__(self, n: int, p: int):
        if not 1 <= p <= n - 1:
            raise InvalidInput("GrassmannProjector needs 1 <= p <= n-1")
        self.n, self.p = n, p
        self.ambient_shape = (n, n)
        self.dim = p * (n - p)
        self.name = f"grassmann({n},{p})"

    def feasibility_residual(self, x):
        r_sym = np.linalg.norm(x - x.T)
        r_idem = np.linalg.norm(x @ x - x)
        r_tr = abs(np.trace(x) - self.p)
        return float(max(r_sym, r_idem, r_tr))

    def project(self, x, a):
        s = _sym(a)
        xs = x @ s
        return xs + xs.T - 2.0 * (x @ s @ x)

    def project_stack(self, x, stack):
        s = 0.5 * (stack + stack.transpose(0, 2, 1))
        xs = x @ s
        return xs + xs.transpose(0, 2, 1) - 2.0 * (xs @ x)

    def projector_differential(self, x, u, a):
        s = _sym(a)
        us, su = u @ s, s @ u
        return us + su - 2.0 * (us @ x + x @ su)

    def second_fundamental_form(self, x, u, v):
        pv = x @ v - v @ x  # [P, G]
        return u @ pv - pv @ u  # [D, [P, G]]

    def frame_of(self, x: np.ndarray) -> np.ndarray:
        """Orthonormal basis of range(P): eigenvectors of the top eigenvalues."""
        _, vecs = np.linalg.eigh(_sym(x))
        return vecs[:, self.n - self.p:]

    def full_frames(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        _, vecs = np.linalg.eigh(_sym(x))
        return vecs[:, self.n - self.p:], vecs[:, : self.n - self.p]

    def _retract(self, x, v, kind):
        xf = self.frame_of(x)
        return self.retract_with_frame(x, v, xf)[0]

    def retract_with_frame(
        self, x: np.ndarray, v: np.ndarray, xf: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Geodesic step returning (new projector, new frame).

        The horizontal lift of the tangent matrix v at frame X is G = vX;
        with G = U diag(s) W^T (thin SVD over all p columns), the geodesic
        endpoint frame is X W cos(s) W^T + U sin(s) W^T.
        """
        g = v @ xf
        u, s, wh = np.linalg.svd(g, full_matrices=False)
        w = wh.T
        x1 = (xf @ w) * np.cos(s) @ wh + (u * np.sin(s)) @ wh
        x1, _ = qr_positive(x1)  # fp hygiene; analytically orthonormal
        return _sym(x1 @ x1.T), x1

    def tangent_basis(self, x):
        xf, xc = self.full_frames(x)
        n, p = self.n, self.p
        cols = np.empty((n * n, self.dim))
        m = 0
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for i in range(p):
            for a in range(n - p):
                e = np.outer(xf[:, i], xc[:, a])
                cols[:, m] = (e + e.T).reshape(-1) * inv_sqrt2
                m += 1
        return cols

    def random_ambient(self, rng):
        return _sym(rng.standard_normal((self.n, self.n)))

    def random_point(self, rng):
        q, _ = qr_positive(rng.standard_normal((self.n, self.p)))
        return _sym(q @ q.T)


class FixedRank(Manifold):
    """Matrices in R^{m x n} of fixed rank r (dense coordinates)."""

    retraction_kinds = ("truncate",)
    default_retraction = "truncate"

    def __init__(self, m: int, n: int, r: int):
        if not 1 <= r <= min(m, n):
            raise InvalidInput("FixedRank needs 1 <= r <= min(m, n)")
        self.m, self.n, self.r = m, n, r
        self.ambient_shape = (m, n)
        self.dim = (m + n - r) * r
        self.name = f"fixedrank({m},{n},{r})"

    def factors(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u, s, vh = np.linalg.svd(x, full_matrices=False)
        return u[:, : self.r], s[: self.r], vh[: self.r].T

    def feasibility_residual(self, x):
        s = np.linalg.svd(x, compute_uv=False)
        if s[0] == 0.0:
            return 1.0
        drop = s[self.r] / s[0] if s.size > self.r else 0.0
        keep_deficit = max(0.0, tol.FEASIBILITY_TOL - s[self.r - 1] / s[0])
        return float(max(drop, keep_deficit))

    def project(self, x, a):
        u, _, v = self.factors(x)
        au = a - u @ (u.T @ a)
        return a - (au - (au @ v) @ v.T)

    def projector_differential(self, x, psi, a):
        u, s, v = self.factors(x)
        pu = np.eye(self.m) - u @ u.T
        pv = np.eye(self.n) - v @ v.T
        du = pu @ psi @ (v / s)          # dU = (I-UU^T) psi V Sigma^{-1}
        dv = pv @ psi.T @ (u / s)        # dV = (I-VV^T) psi^T U Sigma^{-1}
        left = du @ u.T + u @ du.T
        right = dv @ v.T + v @ dv.T
        return left @ a @ pv + pu @ a @ right

    def second_fundamental_form(self, x, u_vec, v_vec):
        u, s, v = self.factors(x)
        pu = np.eye(self.m) - u @ u.T
        pv = np.eye(self.n) - v @ v.T
        t1 = pu @ u_vec @ (v / s) @ (u.T @ v_vec) @ pv
        t2 = pu @ v_vec @ (v / s) @ (u.T @ u_vec) @ pv
        return t1 + t2

    def _retract(self, x, v, kind):
        u, s, vh = np.linalg.svd(x + v, full_matrices=False)
        if s.size < self.r or s[self.r - 1] <= tol.SVD_RANK_REL * max(1.0, s[0]):
            raise RetractionDomain("fixedrank: truncation lost rank")
        return (u[:, : self.r] * s[: self.r]) @ vh[: self.r]

    def tangent_basis(self, x):
        u, _, v = self.factors(x)
        uc = _orth_complement(u)
        vc = _orth_complement(v)
        cols = []
        for i in range(self.r):
            for j in range(self.r):
                cols.append(np.outer(u[:, i], v[:, j]).reshape(-1))
        for a in range(self.m - self.r):
            for j in range(self.r):
                cols.append(np.outer(uc[:, a], v[:, j]).reshape(-1))
        for i in range(self.r):
            for b in range(self.n - self.r):
                cols.append(np.outer(u[:, i], vc[:, b]).reshape(-1))
        return np.stack(cols, axis=1)

    def random_point(self, rng):
        u, _ = qr_positive(rng.standard_normal((self.m, self.r)))
        v, _ = qr_positive(rng.standard_normal((self.n, self.r)))
        s = np.sort(0.5 + np.abs(rng.standard_normal(self.r)))[::-1]
        return (u * s) @ v.T


def _orth_complement(frame: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(frame, mode="complete")
    return q[:, frame.shape[1]:]


@dataclass(frozen=True)
class LevelSetSpec:
    """Smooth constraint system c(x) = 0 in R^n with q independent rows.

    hess_action(x, u) returns the q x n matrix whose i-th row is
    u^T Hess c_i(x), i.e. the directional derivative of jac along u.
    """

    ambient_dim: int
    n_constraints: int
    c: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]
    hess_action: Callable[[np.ndarray, np.ndarray], np.ndarray]
    feasible_point: np.ndarray | None = None


class LevelSet(Manifold):
    """Regular level set {x : c(x) = 0} with projection retraction."""

    retraction_kinds = ("project",)
    default_retraction = "project"

    def __init__(self, spec: LevelSetSpec):
        if not 1 <= spec.n_constraints < spec.ambient_dim:
            raise InvalidInput("LevelSet needs 1 <= q < n")
        self.spec = spec
        self.ambient_shape = (spec.ambient_dim,)
        self.dim = spec.ambient_dim - spec.n_constraints
        self.name = f"levelset({spec.ambient_dim},{spec.n_constraints})"

    def _jac(self, x: np.ndarray) -> np.ndarray:
        j = np.asarray(self.spec.jac(x), dtype=float)
        sv = np.linalg.svd(j, compute_uv=False)
        if sv[-1] <= 1e-10 * max(1.0, sv[0]):
            raise RegularityViolation("constraint Jacobian is rank-deficient")
        return j

    def feasibility_residual(self, x):
        return float(np.max(np.abs(self.spec.c(x))))

    def project(self, x, a):
        j = self._jac(x)
        m = j @ j.T
        return a - j.T @ np.linalg.solve(m, j @ a)

    def projector_differential(self, x, u, a):
        j = self._jac(x)
        jd = np.asarray(self.spec.hess_action(x, u), dtype=float)
        m = j @ j.T
        ja = np.linalg.solve(m, j @ a)
        jda = np.linalg.solve(m, jd @ a)
        md = jd @ j.T + j @ jd.T
        return -(jd.T @ ja) - j.T @ jda + j.T @ np.linalg.solve(m, md @ ja)

    def second_fundamental_form(self, x, u, v):
        j = self._jac(x)
        jd = np.asarray(self.spec.hess_action(x, u), dtype=float)
        return -j.T @ np.linalg.solve(j @ j.T, jd @ v)

    def _retract(self, x, v, kind):
        j0 = self._jac(x)
        y = x + v
        lam = np.zeros(self.spec.n_constraints)
        res = np.asarray(self.spec.c(y), dtype=float)
        best = np.linalg.norm(res)
        for _ in range(tol.NEWTON_RETRACT_MAXIT):
            if best <= tol.NEWTON_RETRACT_TOL:
                return y + j0.T @ lam
            point = y + j0.T @ lam
            jy = np.asarray(self.spec.jac(point), dtype=float)
            try:
                step = np.linalg.solve(jy @ j0.T, np.asarray(self.spec.c(point), float))
            except np.linalg.LinAlgError as exc:
                raise RetractionDomain("levelset: Newton system singular") from exc
            alpha = 1.0
            for _ in range(20):
                trial = lam - alpha * step
                r = np.linalg.norm(np.asarray(self.spec.c(y + j0.T @ trial), float))
                if r < best:
                    lam, best = trial, r
                    break
                alpha *= 0.5
            else:
                raise RetractionDomain("levelset: projection line search stalled")
        if best <= tol.NEWTON_RETRACT_TOL:
            return y + j0.T @ lam
        raise RetractionDomain("levelset: projection did not converge")

    def tangent_basis(self, x):
        j = self._jac(x)
        _, _, vh = np.linalg.svd(j, full_matrices=True)
        return vh[self.spec.n_constraints:].T

    def random_point(self, rng):
        """Short random walk from the seed point; steps shrink on domain errors.

        The projection retraction only reaches a neighborhood of its base
        point, so large single draws can leave its domain entirely.
        """
        if self.spec.feasible_point is None:
            raise MissingCapability("levelset: no feasible point to sample from")
        x = np.asarray(self.spec.feasible_point, dtype=float)
        for _ in range(3):
            v = self.project(x, 0.2 * rng.standard_normal(self.ambient_shape))
            for _ in range(6):
                try:
                    x = self.retract(x, v)
                    break
                except RetractionDomain:
                    v = 0.5 * v
        return x


# -- objective-coupled operations --------------------------------------------


def tangent_project(manifold: Manifold, x: np.ndarray, a: np.ndarray) -> np.ndarray:
    return manifold.project(x, a)


def second_fundamental_form(manifold: Manifold, x, u, v) -> np.ndarray:
    return manifold.second_fundamental_form(x, u, v)


def retract(manifold: Manifold, x, v, kind: str | None = None) -> np.ndarray:
    return manifold.retract(x, v, kind)


def riemannian_gradient(obj, manifold: Manifold, x: np.ndarray) -> np.ndarray:
    """Tangent projection of the Euclidean gradient."""
    return manifold.project(x, obj.egrad(x))


def riemannian_hessian_vec(
    obj, manifold: Manifold, x: np.ndarray, v: np.ndarray, route: str = "auto"
) -> np.ndarray:
    """Riemannian Hessian applied to a tangent vector.

    route='auto' prefers the objective's closed form when present;
    route='override' demands it; route='generic' forces the assembled form
    Proj(ehess[v]) + Weingarten(v, normal gradient part), which differentiates
    the canonical tangent extension of the gradient field.
    """
    if route not in ("auto", "override", "generic"):
        raise InvalidInput(f"unknown hessian route {route!r}")
    if route in ("auto", "override") and obj.rhess_override is not None:
        return obj.rhess_override(x, v)
    if route == "override":
        raise MissingCapability("objective has no closed-form Riemannian Hessian")
    if obj.ehess_vec is None:
        raise MissingCapability("objective has no Euclidean Hessian action")
    g = obj.egrad(x)
    g_normal = g - manifold.project(x, g)
    core = manifold.project(x, obj.ehess_vec(x, v))
    return core + manifold.weingarten(x, v, g_normal)


def compressed_hessian(
    obj, manifold: Manifold, x: np.ndarray, route: str = "auto"
) -> tuple[np.ndarray, np.ndarray]:
    """Dense d x d Hessian on an orthonormal tangent basis; returns (H, basis)."""
    basis = manifold.tangent_basis(x)
    d = basis.shape[1]
    hcols = np.empty((manifold.ambient_size, d))
    for j in range(d):
        hv = riemannian_hessian_vec(obj, manifold, x, manifold.unflatten(basis[:, j]), route)
        hcols[:, j] = manifold.flatten(hv)
    h = basis.T @ hcols
    return 0.5 * (h + h.T), basis
