import numpy as np
import pytest

from saddlekit.bundle import BundleState
from saddlekit.dynamics import (
    RunRecord,
    SolverConfig,
    classify,
    measure_rate,
    p_direction,
    rate_report,
    solve,
    x_direction,
)
from saddlekit.errors import Degenerate, InsufficientData, InvalidInput
from saddlekit.manifolds import Flat, GrassmannProjector, LevelSet, LevelSetSpec
from saddlekit.objectives import (
    Objective,
    lep_grassmann_objective,
    make_lep,
)
from saddlekit.oracle import enumerate_catalog, match_terminal


def quadratic_objective(diag):
    m = np.diag(np.asarray(diag, dtype=float))
    return Objective(
        value=lambda x: float(0.5 * x @ m @ x),
        egrad=lambda x: m @ x,
        ehess_vec=lambda x, v: m @ v,
        name="quadratic",
    )


def flat_state(diag_len, k, cols=None):
    man = Flat((diag_len,))
    x = np.ones(diag_len)
    if cols is None:
        cols = [np.eye(diag_len)[j] for j in range(k)]
    return BundleState.from_columns(man, x, cols)


def test_x_direction_reflects_plane_components():
    obj = quadratic_objective([-1.0, 1.0, 2.0])
    st = flat_state(3, 1)  # plane along e1
    d = x_direction(obj, st.manifold, st.x, st.frame)
    g = np.array([-1.0, 1.0, 2.0])  # gradient at ones
    np.testing.assert_allclose(d, np.array([g[0], -g[1], -g[2]]), atol=1e-14)


def test_x_direction_without_plane_is_steepest_descent():
    obj = quadratic_objective([1.0, 2.0, 3.0])
    st = flat_state(3, 0)
    d = x_direction(obj, st.manifold, st.x, st.frame)
    np.testing.assert_allclose(d, -np.array([1.0, 2.0, 3.0]), atol=1e-14)


def test_p_direction_matches_frame_formula():
    obj = quadratic_objective([-1.0, 1.0, 2.0])
    man = Flat((3,))
    w = np.linalg.qr(np.random.default_rng(0).standard_normal((3, 1)))[0]
    z = (np.eye(3) - w @ w.T) @ np.diag([-1.0, 1.0, 2.0]) @ w
    want = -(w @ z.T + z @ w.T)
    got = p_direction(obj, man, np.ones(3), w, route="generic")
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_solve_flat_saddle_turns_plane_and_converges():
    obj = quadratic_objective([-1.0, 1.0, 2.0])
    # plane starts away from the unstable direction and must rotate onto it
    st = flat_state(3, 1, cols=[np.array([1.0, 1.0, 1.0])])
    rec = solve(obj, st, SolverConfig(eta_x=0.4, tol=1e-10))
    assert rec.converged
    assert rec.failure is None
    np.testing.assert_allclose(rec.state.x, np.zeros(3), atol=1e-8)
    e1 = np.eye(3)[:, :1]
    np.testing.assert_allclose(
        rec.state.plane_projector(), e1 @ e1.T, atol=1e-6
    )


def test_residual_histories_start_with_sentinel():
    obj = quadratic_objective([1.0, 2.0, 3.0])
    rec = solve(obj, flat_state(3, 0), SolverConfig(eta_x=0.3, tol=1e-10))
    assert rec.r_x[0] == np.inf
    assert rec.r_x[1] == 1.0
    assert rec.r_plane[0] == np.inf
    assert np.all(rec.r_plane[1:] == 0.0)  # k = 0: plane channel is silent
    assert rec.converged


def test_solve_detects_divergence():
    obj = quadratic_objective([-1.0, 1.0, 2.0])
    rec = solve(obj, flat_state(3, 0), SolverConfig(eta_x=3.0))
    assert not rec.converged
    assert rec.failure == "diverged"


def test_solve_respects_iteration_cap():
    obj = quadratic_objective([1.0, 2.0, 3.0])
    rec = solve(obj, flat_state(3, 0), SolverConfig(eta_x=0.3, maxit=3, tol=1e-16))
    assert not rec.converged
    assert rec.failure is None
    assert rec.iterations == 3
    assert len(rec.r_x) == 5  # sentinel plus four computed entries


def test_solve_records_retraction_domain_failures():
    spec = LevelSetSpec(
        ambient_dim=2,
        n_constraints=1,
        c=lambda x: np.array([x[0] ** 2 + 25.0 * x[1] ** 2 - 1.0]),
        jac=lambda x: np.array([[2.0 * x[0], 50.0 * x[1]]]),
        hess_action=lambda x, u: np.array([[2.0 * u[0], 50.0 * u[1]]]),
        feasible_point=np.array([1.0, 0.0]),
    )
    man = LevelSet(spec)
    obj = Objective(
        value=lambda x: float(x[1]),
        egrad=lambda x: np.array([0.0, 1.0]),
        ehess_vec=lambda x, v: np.zeros(2),
    )
    st = BundleState(man, np.array([1.0, 0.0]), np.empty((2, 0)))
    rec = solve(obj, st, SolverConfig(eta_x=50.0))
    assert not rec.converged
    assert rec.failure == "retraction_domain"


def test_solve_checks_k_consistency():
    obj = quadratic_objective([1.0, 2.0, 3.0])
    with pytest.raises(InvalidInput):
        solve(obj, flat_state(3, 1), SolverConfig(eta_x=0.1, k=2))


def test_solver_config_validation():
    with pytest.raises(InvalidInput):
        SolverConfig(eta_x=-1.0)
    with pytest.raises(InvalidInput):
        SolverConfig(eta_x=1.0, eta_plane=0.0)
    with pytest.raises(InvalidInput):
        SolverConfig(eta_x=1.0, retraction="nope")
    with pytest.raises(InvalidInput):
        SolverConfig(eta_x=1.0, variant="nope")
    with pytest.raises(InvalidInput):
        SolverConfig(eta_x=1.0, tol=0.0)
    assert SolverConfig(eta_x=2.0).plane_step == 2.0
    assert SolverConfig(eta_x=2.0, eta_plane=0.5).plane_step == 0.5


def test_classify_matches_catalog_indices():
    spec = make_lep(10, 2, 1.01, seed=0)
    obj = lep_grassmann_objective(spec)
    man = GrassmannProjector(10, 2)
    catalog = enumerate_catalog(spec)
    for config in [(1, 2), (1, 3), (9, 10)]:
        e = catalog.entry_for_config(config)
        evals, index, n_zero = classify(obj, man, e.projector)
        assert index == e.index
        assert n_zero == 0
        # the solver's objective carries half the catalog's raw spectrum
        np.testing.assert_allclose(evals, np.sort(e.spectrum) / 2.0, atol=1e-10)


def test_solve_lep_reaches_a_catalog_entry():
    spec = make_lep(10, 2, 1.01, seed=0)
    obj = lep_grassmann_objective(spec)
    man = GrassmannProjector(10, 2)
    catalog = enumerate_catalog(spec)
    e = catalog.entry_for_config((1, 3))
    rng = np.random.default_rng(1)
    # start near the index-1 point with a fresh random plane
    x0 = man.retract(e.projector, 1e-3 * man.random_tangent(e.projector, rng))
    st = BundleState.from_columns(man, x0, [man.random_tangent(x0, rng)])
    rec = solve(obj, st, SolverConfig(eta_x=25.0, tol=1e-9), classify_terminal=True)
    assert rec.converged
    hit = match_terminal(catalog, rec.state.x)
    assert hit is not None and hit.config == (1, 3)
    assert rec.index == 1
    assert rec.degenerate == 0
    np.testing.assert_allclose(rec.value, e.value, atol=1e-8)


def test_rate_report_symmetric_pair():
    rep = rate_report([-1.0, 1.0], k=1)
    assert rep.eta_x_star == 1.0
    assert rep.q1 == 0.0
    assert rep.kappa_x == 1.0
    assert rep.gap_adjacent == 2.0
    assert rep.gap_span == 2.0
    assert rep.eta_plane_star == 0.5
    assert rep.q2 == 0.0
    assert rep.q == 0.0


def test_rate_report_with_supplied_steps():
    rep = rate_report([-1.0, 1.0], k=1, eta_x=0.5, eta_plane=0.25)
    assert rep.q1 == 0.5
    assert rep.q2 == 0.5
    assert rep.q == 0.5


def test_rate_report_boundary_cases():
    rep0 = rate_report([1.0, 2.0], k=0)
    assert rep0.q2 is None and rep0.eta_plane_star is None
    rep2 = rate_report([-2.0, -1.0], k=2)
    assert rep2.q2 is None
    np.testing.assert_allclose(rep2.eta_x_star, 2.0 / 3.0)


def test_rate_report_degenerate_and_invalid():
    with pytest.raises(Degenerate):
        rate_report([1.0, 2.0], k=1)
    with pytest.raises(Degenerate):
        rate_report([-1.0, 2.0], k=2)
    with pytest.raises(InvalidInput):
        rate_report([], k=0)
    with pytest.raises(InvalidInput):
        rate_report([1.0], k=5)


def synthetic_record(ratios):
    man = Flat((2,))
    st = BundleState(man, np.zeros(2), np.empty((2, 0)))
    r = np.concatenate([[np.inf], np.cumprod(np.concatenate([[1.0], ratios]))])
    return RunRecord(
        state=st,
        iterations=len(r) - 1,
        converged=True,
        r_x=r,
        r_plane=np.zeros_like(r),
        value=0.0,
    )


def test_measure_rate_recovers_geometric_decay():
    rec = synthetic_record(np.full(199, 0.9))
    np.testing.assert_allclose(measure_rate(rec, window=50), 0.9, atol=1e-12)


def test_measure_rate_requires_enough_history():
    rec = synthetic_record(np.full(10, 0.9))
    with pytest.raises(InsufficientData):
        measure_rate(rec, window=50)
    with pytest.raises(InvalidInput):
        measure_rate(rec, window=1)
