import numpy as np
import pytest

from saddlekit.errors import InvalidInput, RankDeficient
from saddlekit.linalg import (
    Frame,
    Projector,
    SymMatrix,
    commutator,
    qr_positive,
    sym_eig,
    thin_qr,
    thin_svd,
)


def test_sym_eig_reconstructs_and_sorts():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.standard_normal((6, 6))
        a = a + a.T
        w, v = sym_eig(a)
        assert np.all(np.diff(w) >= 0)
        np.testing.assert_allclose((v.cols * w) @ v.cols.T, a, atol=1e-12)
        np.testing.assert_allclose(v.cols.T @ v.cols, np.eye(6), atol=1e-13)


def test_sym_eig_rejects_nonsquare():
    with pytest.raises(InvalidInput):
        sym_eig(np.zeros((3, 4)))


def test_qr_positive_is_deterministic_and_reconstructs():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m = rng.standard_normal((7, 4))
        q, r = qr_positive(m)
        np.testing.assert_allclose(q @ r, m, atol=1e-13)
        assert np.all(np.diag(r) >= 0)
        q2, r2 = qr_positive(m.copy())
        np.testing.assert_array_equal(q, q2)
        np.testing.assert_array_equal(r, r2)


def test_thin_qr_orthonormalizes():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((8, 3))
    f = thin_qr(m)
    np.testing.assert_allclose(f.cols.T @ f.cols, np.eye(3), atol=1e-13)
    # same column space: projection of m onto the frame reproduces m
    np.testing.assert_allclose(f.cols @ (f.cols.T @ m), m, atol=1e-12)


def test_thin_qr_flags_rank_deficiency():
    m = np.ones((5, 2))
    with pytest.raises(RankDeficient):
        thin_qr(m)


def test_thin_qr_empty_is_fine():
    f = thin_qr(np.empty((4, 0)))
    assert f.cols.shape == (4, 0)


def test_thin_svd_reconstructs_and_truncates():
    rng = np.random.default_rng(3)
    base = rng.standard_normal((6, 2))
    m = base @ rng.standard_normal((2, 5))  # rank 2 by construction
    q, s, u = thin_svd(m)
    assert s.shape == (2,)
    assert s[0] >= s[1] > 0
    np.testing.assert_allclose((q.cols * s) @ u.cols.T, m, atol=1e-12)


def test_thin_svd_zero_matrix_has_rank_zero():
    q, s, u = thin_svd(np.zeros((4, 3)))
    assert s.size == 0
    assert q.cols.shape == (4, 0)
    assert u.cols.shape == (3, 0)


def test_commutator_antisymmetry():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((5, 5))
    b = rng.standard_normal((5, 5))
    np.testing.assert_allclose(commutator(a, b), -commutator(b, a), atol=1e-14)
    with pytest.raises(InvalidInput):
        commutator(a, np.zeros((4, 4)))


def test_symmatrix_enforces_symmetry():
    SymMatrix(np.eye(3))
    with pytest.raises(InvalidInput):
        SymMatrix(np.triu(np.ones((3, 3))))


def test_frame_enforces_orthonormality():
    Frame(np.eye(4)[:, :2])
    with pytest.raises(InvalidInput):
        Frame(np.ones((4, 2)))


def test_projector_enforces_idempotency_and_rank():
    p = np.diag([1.0, 1.0, 0.0])
    Projector(p, rank=2)
    with pytest.raises(InvalidInput):
        Projector(p, rank=1)
    with pytest.raises(InvalidInput):
        Projector(0.5 * np.eye(3), rank=1)
