import itertools

import numpy as np
import pytest

from saddlekit.errors import AmbiguousMatch, InvalidInput
from saddlekit.manifolds import Flat
from saddlekit.objectives import Objective, make_lep
from saddlekit.oracle import (
    catalog_entry,
    enumerate_catalog,
    fd_gradient,
    fd_hessian_vec,
    match_terminal,
)


@pytest.fixture(scope="module")
def spec():
    return make_lep(10, 2, 1.01, seed=0)


@pytest.fixture(scope="module")
def catalog(spec):
    return enumerate_catalog(spec)


def test_catalog_has_one_entry_per_configuration(catalog):
    assert len(catalog.entries) == 45
    configs = {e.config for e in catalog.entries}
    assert configs == set(itertools.combinations(range(1, 11), 2))


def test_catalog_values_are_half_sums(spec, catalog):
    for e in catalog.entries:
        idx = [c - 1 for c in e.config]
        np.testing.assert_allclose(e.value, 0.5 * spec.sigma[idx].sum(), atol=1e-15)


def test_catalog_indices_count_unstable_directions(catalog):
    # index = number of (kept, discarded) pairs with kept above discarded
    by_index = {}
    for e in catalog.entries:
        by_index.setdefault(e.index, []).append(e)
    assert set(by_index) == set(range(17))
    assert len(by_index[0]) == 1
    assert by_index[0][0].config == (1, 2)
    assert len(by_index[16]) == 1
    assert by_index[16][0].config == (9, 10)
    assert len(by_index[8]) == 5


def test_entry_projector_and_spectrum(spec):
    e = catalog_entry(spec, (1, 3))
    np.testing.assert_allclose(e.projector, e.projector.T, atol=1e-14)
    np.testing.assert_allclose(e.projector @ e.projector, e.projector, atol=1e-13)
    np.testing.assert_allclose(e.frame @ e.frame.T, e.projector, atol=1e-13)
    # difference spectrum: sigma_a - sigma_i over discarded a, kept i
    kept = [0, 2]
    discarded = [a for a in range(10) if a not in kept]
    diffs = sorted(spec.sigma[a] - spec.sigma[i] for a in discarded for i in kept)
    np.testing.assert_allclose(e.spectrum, diffs, atol=1e-14)
    assert e.index == int(np.sum(np.array(diffs) < 0))


def test_catalog_entry_rejects_bad_config(spec):
    with pytest.raises(InvalidInput):
        catalog_entry(spec, (1, 1))
    with pytest.raises(InvalidInput):
        catalog_entry(spec, (0, 2))
    with pytest.raises(InvalidInput):
        catalog_entry(spec, (1, 2, 3))


def test_match_terminal_accepts_frames_and_projectors(spec, catalog):
    e = catalog.entry_for_config((2, 5))
    assert match_terminal(catalog, e.projector).config == (2, 5)
    assert match_terminal(catalog, e.frame).config == (2, 5)
    # small perturbation still matches; distant plane does not
    rng = np.random.default_rng(0)
    noisy = e.projector + 1e-6 * rng.standard_normal((10, 10))
    assert match_terminal(catalog, noisy).config == (2, 5)
    # coordinate planes are generically far from every eigenplane
    assert match_terminal(catalog, np.eye(10)[:, :2]) is None
    far = catalog.entry_for_config((7, 9))
    assert match_terminal(catalog, far.projector).config == (7, 9)


def test_match_terminal_flags_ambiguity(catalog):
    e = catalog.entry_for_config((1, 2))
    with pytest.raises(AmbiguousMatch):
        match_terminal(catalog, e.projector, match_tol=10.0)
    with pytest.raises(InvalidInput):
        match_terminal(catalog, np.zeros((3, 7)))


def test_min_value_separation_resolves_match_tol(catalog):
    assert catalog.min_value_separation() > 0


def test_fd_probes_are_exact_on_quadratics():
    man = Flat((4,))
    m = np.diag([1.0, -2.0, 3.0, 0.5])
    obj = Objective(
        value=lambda x: float(0.5 * x @ m @ x),
        egrad=lambda x: m @ x,
        ehess_vec=lambda x, v: m @ v,
    )
    rng = np.random.default_rng(1)
    x = rng.standard_normal(4)
    v = rng.standard_normal(4)
    np.testing.assert_allclose(fd_gradient(obj, man, x), m @ x, atol=1e-7)
    np.testing.assert_allclose(fd_hessian_vec(obj, man, x, v), m @ v, atol=1e-7)
