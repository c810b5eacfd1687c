import numpy as np
import pytest

from saddlekit.errors import InfeasiblePoint, InvalidInput, MissingCapability
from saddlekit.manifolds import (
    FixedRank,
    Flat,
    GrassmannProjector,
    LevelSet,
    LevelSetSpec,
    Manifold,
    Sphere,
    Stiefel,
    compressed_hessian,
    riemannian_gradient,
    riemannian_hessian_vec,
)
from saddlekit.objectives import Objective
from saddlekit.oracle import fd_gradient, fd_hessian_vec, fd_projector_differential

ALL_MANIFOLDS = [
    Flat((3, 4)),
    Sphere(7),
    Stiefel(6, 2),
    GrassmannProjector(6, 2),
    FixedRank(5, 4, 2),
]


def unit_sphere_levelset(n):
    spec = LevelSetSpec(
        ambient_dim=n,
        n_constraints=1,
        c=lambda x: np.array([x @ x - 1.0]),
        jac=lambda x: 2.0 * x[None, :],
        hess_action=lambda x, u: 2.0 * u[None, :],
        feasible_point=np.eye(n)[0],
    )
    return LevelSet(spec)


def quartic_objective(manifold, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(manifold.ambient_size)
    m = rng.standard_normal((manifold.ambient_size, manifold.ambient_size))
    m = 0.5 * (m + m.T)

    def value(x):
        v = manifold.flatten(x)
        return float(0.25 * (v @ v) ** 2 + 0.5 * v @ m @ v + c @ v)

    def egrad(x):
        v = manifold.flatten(x)
        return manifold.unflatten((v @ v) * v + m @ v + c)

    def ehess_vec(x, u):
        v = manifold.flatten(x)
        h = manifold.flatten(u)
        return manifold.unflatten((v @ v) * h + 2.0 * (v @ h) * v + m @ h)

    return Objective(value=value, egrad=egrad, ehess_vec=ehess_vec, name="quartic")


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: m.name)
def test_random_points_are_feasible(man):
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = man.random_point(rng)
        assert man.feasibility_residual(x) <= 1e-10


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: m.name)
def test_projection_is_idempotent_and_symmetric(man):
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = man.random_point(rng)
        a = man.random_ambient(rng)
        b = man.random_ambient(rng)
        pa = man.project(x, a)
        np.testing.assert_allclose(man.project(x, pa), pa, atol=1e-12)
        # orthogonal projection is self-adjoint
        lhs = man.inner(man.project(x, a), b)
        rhs = man.inner(a, man.project(x, b))
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: m.name)
def test_tangent_basis_matches_projection(man):
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = man.random_point(rng)
        b = man.tangent_basis(x)
        assert b.shape == (man.ambient_size, man.dim)
        np.testing.assert_allclose(b.T @ b, np.eye(man.dim), atol=1e-10)
        a = man.flatten(man.random_ambient(rng))
        np.testing.assert_allclose(
            b @ (b.T @ a), man.flatten(man.project(x, man.unflatten(a))), atol=1e-9
        )


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: m.name)
def test_retraction_is_feasible_and_first_order(man):
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = man.random_point(rng)
        v = man.random_tangent(x, rng)
        for t in (1e-2, 1e-3):
            y = man.retract(x, t * v)
            assert man.feasibility_residual(y) <= 1e-9
            defect = man.norm(
                man.unflatten(man.flatten(y) - man.flatten(x) - t * man.flatten(v))
            )
            assert defect <= 10.0 * t**2 * max(1.0, man.norm(v)) ** 2


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: m.name)
def test_projector_differential_matches_finite_differences(man):
    rng = np.random.default_rng(4)
    for _ in range(5):
        x = man.random_point(rng)
        u = man.random_tangent(x, rng)
        a = man.random_ambient(rng)
        got = man.projector_differential(x, u, a)
        want = fd_projector_differential(man, x, u, a)
        np.testing.assert_allclose(got, want, atol=1e-5)


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: m.name)
def test_second_fundamental_form_is_normal_and_symmetric(man):
    rng = np.random.default_rng(5)
    for _ in range(5):
        x = man.random_point(rng)
        u = man.random_tangent(x, rng)
        v = man.random_tangent(x, rng)
        ii = man.second_fundamental_form(x, u, v)
        # normal component only: projecting it back to the tangent kills it
        assert man.norm(man.project(x, ii)) <= 1e-9 * (1.0 + man.norm(ii))
        np.testing.assert_allclose(ii, man.second_fundamental_form(x, v, u), atol=1e-10)


def test_sphere_geometry_closed_forms():
    man = Sphere(5)
    x = np.eye(5)[0]
    u = np.eye(5)[1]
    v = np.eye(5)[2]
    np.testing.assert_allclose(man.second_fundamental_form(x, u, u), -x, atol=1e-14)
    np.testing.assert_allclose(man.second_fundamental_form(x, u, v), np.zeros(5), atol=1e-14)
    y = man.retract(x, np.pi / 2 * u, kind="exp")
    np.testing.assert_allclose(y, u, atol=1e-14)


def test_grassmann_frame_roundtrip_and_geodesic():
    man = GrassmannProjector(6, 2)
    rng = np.random.default_rng(6)
    x = man.random_point(rng)
    f = man.frame_of(x)
    np.testing.assert_allclose(f @ f.T, x, atol=1e-12)
    v = man.random_tangent(x, rng)
    y1 = man.retract(x, v)
    y2, f2 = man.retract_with_frame(x, v, f)
    np.testing.assert_allclose(y1, y2, atol=1e-12)
    np.testing.assert_allclose(f2 @ f2.T, y2, atol=1e-12)


def test_stiefel_retraction_is_qr_based():
    man = Stiefel(6, 2)
    rng = np.random.default_rng(7)
    x = man.random_point(rng)
    v = man.random_tangent(x, rng)
    y = man.retract(x, v)
    np.testing.assert_allclose(y.T @ y, np.eye(2), atol=1e-12)


def test_fixed_rank_retraction_truncates():
    man = FixedRank(5, 4, 2)
    rng = np.random.default_rng(8)
    x = man.random_point(rng)
    v = man.random_tangent(x, rng)
    y = man.retract(x, 0.1 * v)
    assert np.linalg.matrix_rank(y, tol=1e-10) == 2


def test_levelset_matches_sphere():
    ls = unit_sphere_levelset(6)
    sp = Sphere(6)
    rng = np.random.default_rng(9)
    x = ls.random_point(rng)
    np.testing.assert_allclose(np.linalg.norm(x), 1.0, atol=1e-12)
    a = rng.standard_normal(6)
    np.testing.assert_allclose(ls.project(x, a), sp.project(x, a), atol=1e-12)
    u = ls.random_tangent(x, rng)
    v = ls.random_tangent(x, rng)
    np.testing.assert_allclose(
        ls.second_fundamental_form(x, u, v),
        sp.second_fundamental_form(x, u, v),
        atol=1e-10,
    )
    y = ls.retract(x, 0.1 * u)
    np.testing.assert_allclose(np.linalg.norm(y), 1.0, atol=1e-12)


def test_levelset_without_feasible_point_cannot_sample():
    spec = LevelSetSpec(
        ambient_dim=3,
        n_constraints=1,
        c=lambda x: np.array([x @ x - 1.0]),
        jac=lambda x: 2.0 * x[None, :],
        hess_action=lambda x, u: 2.0 * u[None, :],
    )
    with pytest.raises(MissingCapability):
        LevelSet(spec).random_point(np.random.default_rng(0))


def test_check_point_rejects_infeasible():
    man = Sphere(4)
    with pytest.raises(InfeasiblePoint):
        man.check_point(2.0 * np.eye(4)[0])
    with pytest.raises(InvalidInput):
        man.retract(np.eye(4)[0], np.zeros(4), kind="nope")


@pytest.mark.parametrize(
    "man",
    [Flat((3, 4)), Sphere(7), Stiefel(6, 2), GrassmannProjector(6, 2)],
    ids=lambda m: m.name,
)
def test_riemannian_gradient_matches_finite_differences(man):
    obj = quartic_objective(man, seed=10)
    rng = np.random.default_rng(11)
    for _ in range(4):
        x = man.random_point(rng)
        got = riemannian_gradient(obj, man, x)
        want = fd_gradient(obj, man, x)
        np.testing.assert_allclose(got, want, atol=2e-5)


@pytest.mark.parametrize(
    "man",
    [Flat((3, 4)), Sphere(7), Stiefel(6, 2), GrassmannProjector(6, 2)],
    ids=lambda m: m.name,
)
def test_generic_hessian_matches_finite_differences(man):
    obj = quartic_objective(man, seed=12)
    rng = np.random.default_rng(13)
    for _ in range(4):
        x = man.random_point(rng)
        v = man.random_tangent(x, rng)
        got = riemannian_hessian_vec(obj, man, x, v, route="generic")
        want = fd_hessian_vec(obj, man, x, v)
        scale = 1.0 + man.norm(want)
        assert man.norm(man.unflatten(man.flatten(got) - man.flatten(want))) <= 1e-4 * scale


def test_hessian_route_override_demands_a_closed_form():
    man = Sphere(5)
    obj = quartic_objective(man, seed=14)
    x = man.random_point(np.random.default_rng(15))
    v = man.random_tangent(x, np.random.default_rng(16))
    with pytest.raises(MissingCapability):
        riemannian_hessian_vec(obj, man, x, v, route="override")


def test_compressed_hessian_is_symmetric():
    man = Sphere(6)
    obj = quartic_objective(man, seed=17)
    x = man.random_point(np.random.default_rng(18))
    h, basis = compressed_hessian(obj, man, x)
    assert h.shape == (man.dim, man.dim)
    np.testing.assert_allclose(h, h.T, atol=1e-9)
    assert basis.shape == (man.ambient_size, man.dim)


def test_manifold_dim_counts():
    assert Flat((3, 4)).dim == 12
    assert Sphere(7).dim == 6
    assert Stiefel(6, 2).dim == 6 * 2 - 3
    assert GrassmannProjector(6, 2).dim == 2 * 4
    assert FixedRank(5, 4, 2).dim == (5 + 4 - 2) * 2
