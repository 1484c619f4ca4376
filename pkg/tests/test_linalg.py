import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grassavg.errors import InvalidInput, NearSingular, NumericalDrift, RankDeficient
from grassavg.geometry import GrassmannPoint, principal_angles
from grassavg.linalg import clamp_unit, qr_orthonormalize, solve_small, thin_svd


def test_thin_svd_diagonal():
    res = thin_svd(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(res.singular_values, [3, 2, 1])


def test_thin_svd_identity():
    np.testing.assert_allclose(thin_svd(np.eye(4)).singular_values, np.ones(4))


@pytest.mark.parametrize("shape", [(10, 3), (3, 10), (5, 5), (200, 4)])
def test_thin_svd_round_trip(rng, shape):
    a = rng.standard_normal(shape)
    u, s, v = thin_svd(a)
    r = min(shape)
    assert u.shape == (shape[0], r) and v.shape == (shape[1], r)
    assert np.linalg.norm(u @ np.diag(s) @ v.T - a) <= 1e-8 * np.linalg.norm(a)
    np.testing.assert_allclose(u.T @ u, np.eye(r), atol=1e-10)
    np.testing.assert_allclose(v.T @ v, np.eye(r), atol=1e-10)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)


def test_thin_svd_sign_convention(rng):
    a = rng.standard_normal((8, 3))
    u, s, v = thin_svd(a)
    for j in range(3):
        first = u[np.flatnonzero(np.abs(u[:, j]) > 1e-12)[0], j]
        assert first > 0
    u2, _, v2 = thin_svd(a.copy())
    np.testing.assert_array_equal(u, u2)
    np.testing.assert_array_equal(v, v2)


def test_thin_svd_rejects_nonfinite():
    with pytest.raises(InvalidInput):
        thin_svd(np.array([[1.0, np.nan]]))


def test_qr_scaled_vector():
    np.testing.assert_allclose(qr_orthonormalize([[2.0], [0.0], [0.0]]), [[1], [0], [0]])


def test_qr_fixed_point():
    e = np.eye(4)[:, :2]
    np.testing.assert_array_equal(qr_orthonormalize(e), e)


def test_qr_orthonormal(rng):
    q = qr_orthonormalize(rng.standard_normal((8, 3)))
    np.testing.assert_allclose(q.T @ q, np.eye(3), atol=1e-12)


def test_qr_rank_deficient():
    a = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(RankDeficient) as info:
        qr_orthonormalize(a)
    assert info.value.columns == (1, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(1, 4))
def test_qr_preserves_span(seed, d, k):
    k = min(k, d - 1)
    a = np.random.default_rng(seed).standard_normal((d, k))
    q = qr_orthonormalize(a)
    ref = GrassmannPoint(np.linalg.qr(a)[0])
    assert principal_angles(GrassmannPoint(q), ref).max() < 1e-8
    s = thin_svd(q).singular_values
    np.testing.assert_allclose(s, 1.0, atol=1e-10)


def test_solve_small():
    b = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(solve_small(np.eye(3), b), b)
    np.testing.assert_allclose(solve_small(2 * np.eye(3), np.eye(3)), 0.5 * np.eye(3))


def test_solve_small_residual(rng):
    a = rng.standard_normal((5, 5)) + 5 * np.eye(5)
    b = rng.standard_normal((5, 3))
    x = solve_small(a, b)
    assert np.linalg.norm(a @ x - b) <= 1e-8 * np.linalg.norm(b)


def test_solve_small_singular():
    with pytest.raises(NearSingular):
        solve_small(np.array([[1.0, 0.0], [0.0, 1e-14]]), np.eye(2))


@pytest.mark.parametrize("x, expected", [(1.0000000001, 1.0), (0.5, 0.5), (-1e-9, 0.0)])
def test_clamp_unit(x, expected):
    assert clamp_unit(x) == expected


def test_clamp_unit_drift():
    with pytest.raises(NumericalDrift):
        clamp_unit(1.00001)
