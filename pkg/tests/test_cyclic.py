import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spatialgame.cyclic import CyclicOperator, CyclicTridiagonal, SingularSystemError


def dense(lower, diag, upper):
    n = len(diag)
    a = np.zeros((n, n))
    for k in range(n):
        a[k, k] = diag[k]
        a[k, (k - 1) % n] += lower[k]
        a[k, (k + 1) % n] += upper[k]
    return a


def test_matches_dense_solve():
    rng = np.random.default_rng(0)
    n = 17
    lower, upper = rng.normal(size=n), rng.normal(size=n)
    diag = np.abs(lower) + np.abs(upper) + 1 + rng.random(n)
    rhs = rng.normal(size=n)
    x = CyclicTridiagonal(lower, diag, upper).solve(rhs)
    np.testing.assert_allclose(x, np.linalg.solve(dense(lower, diag, upper), rhs), rtol=1e-12, atol=1e-12)


def test_multiple_right_hand_sides():
    n = 12
    sys_ = CyclicTridiagonal(-np.ones(n), 3 * np.ones(n), -np.ones(n))
    rhs = np.arange(2 * n, dtype=float).reshape(n, 2)
    x = sys_.solve(rhs)
    np.testing.assert_allclose(sys_.matvec(x), rhs, atol=1e-12)


def test_zero_leading_diagonal():
    # a zero diag[0] must not break the corner correction
    lower = np.array([1.0, 1.0, 1.0, 1.0])
    diag = np.array([0.0, 4.0, 4.0, 4.0])
    upper = np.array([2.0, 1.0, 1.0, 1.0])
    rhs = np.array([1.0, 2.0, 3.0, 4.0])
    x = CyclicTridiagonal(lower, diag, upper).solve(rhs)
    np.testing.assert_allclose(dense(lower, diag, upper) @ x, rhs, atol=1e-12)


def test_periodic_laplacian_is_singular():
    n = 16
    with pytest.raises(SingularSystemError):
        CyclicTridiagonal(np.ones(n), -2 * np.ones(n), np.ones(n))


def test_shape_errors():
    with pytest.raises(ValueError):
        CyclicTridiagonal(np.ones(3), np.ones(4), np.ones(4))
    with pytest.raises(ValueError):
        CyclicTridiagonal(np.ones(4), 3 * np.ones(4), np.ones(4)).solve(np.ones(5))


def test_operator_shift_cache_and_dense():
    n = 8
    op = CyclicOperator(np.ones(n), -2.5 * np.ones(n), np.ones(n))
    assert op.shifted(1.0) is op.shifted(1.0)
    m = np.eye(n) - op.to_dense()
    x = np.linspace(0, 1, n)
    np.testing.assert_allclose(op.shifted(1.0).matvec(x), m @ x, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 40).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(-1, 1)),
    arrays(float, n, elements=st.floats(-1, 1)),
    arrays(float, n, elements=st.floats(0.1, 2)),
    arrays(float, n, elements=st.floats(-10, 10)))))
def test_diagonally_dominant_systems(data):
    lower, upper, extra, rhs = data
    diag = np.abs(lower) + np.abs(upper) + extra
    sign = np.where(np.arange(len(diag)) % 3 == 0, -1.0, 1.0)  # mixed-sign diagonal
    x = CyclicTridiagonal(lower, sign * diag, upper).solve(rhs)
    np.testing.assert_allclose(dense(lower, sign * diag, upper) @ x, rhs, atol=1e-9)
