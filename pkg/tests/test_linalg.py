import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rankme import linalg
from rankme.errors import InsufficientData, NotSymmetric, SingularMatrix


def test_invert_identity():
    np.testing.assert_array_equal(linalg.invert(linalg.identity(2)), np.eye(2))


def test_invert_hand_example():
    # det = 4*2 - 0.25 = 7.75
    inv = linalg.invert([[4, 0.5], [0.5, 2]])
    expected = np.array([[2, -0.5], [-0.5, 4]]) / 7.75
    np.testing.assert_allclose(inv, expected, atol=1e-12)
    np.testing.assert_allclose(inv, [[0.2581, -0.0645], [-0.0645, 0.5161]], atol=1e-3)


def test_invert_singular():
    with pytest.raises(SingularMatrix):
        linalg.invert([[1, 1], [1, 1]])


def test_invert_needs_pivoting():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(linalg.invert(m), m)


def test_invert_rejects_nonsquare_and_nonfinite():
    with pytest.raises(ValueError):
        linalg.invert(np.ones((2, 3)))
    with pytest.raises(ValueError):
        linalg.invert([[1.0, np.nan], [0.0, 1.0]])


def _well_conditioned(draw_rng, p):
    a = draw_rng.normal(size=(p, p))
    return a + p * np.eye(p)


@given(st.integers(2, 6), st.integers(0, 2**31))
def test_invert_round_trip(p, seed):
    m = _well_conditioned(np.random.default_rng(seed), p)
    inv = linalg.invert(m)
    assert np.max(np.abs(m @ inv - np.eye(p))) <= 1e-10
    np.testing.assert_allclose(linalg.invert(inv), m, rtol=1e-8, atol=1e-10)
    # independent oracle
    np.testing.assert_allclose(inv, np.linalg.inv(m), rtol=1e-9, atol=1e-12)


def test_is_positive_definite_examples():
    assert linalg.is_positive_definite(linalg.identity(3))
    assert not linalg.is_positive_definite([[1, 2], [2, 1]])
    assert not linalg.is_positive_definite([[0, 0], [0, 0]])


def test_is_positive_definite_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        linalg.is_positive_definite([[1, 0.5], [0.4, 1]])


def _spd(seed, p):
    a = np.random.default_rng(seed).normal(size=(p, p))
    return a @ a.T + 0.1 * np.eye(p)


@given(st.integers(1, 6), st.integers(0, 2**31), st.integers(0, 2**31))
def test_pd_closed_under_sum(p, s1, s2):
    a, b = _spd(s1, p), _spd(s2, p)
    assert linalg.is_positive_definite(a) and linalg.is_positive_definite(b)
    assert linalg.is_positive_definite(a + b)


@given(st.integers(2, 5), st.integers(0, 2**31))
def test_pd_matches_eigenvalue_oracle(p, seed):
    m = np.random.default_rng(seed).normal(size=(p, p))
    m = (m + m.T) / 2
    eig = np.linalg.eigvalsh(m)
    if abs(eig.min()) > 1e-6:
        assert linalg.is_positive_definite(m) == (eig.min() > 0)


def test_cholesky_reconstructs():
    m = _spd(3, 4)
    low = linalg.cholesky(m)
    np.testing.assert_allclose(low @ low.T, m, atol=1e-12)
    assert np.allclose(low, np.tril(low))


def test_centered_covariance_examples():
    np.testing.assert_allclose(linalg.centered_covariance([[0], [2]]), [[1.0]])
    np.testing.assert_array_equal(linalg.centered_covariance([[1, 2], [1, 2], [1, 2]]), np.zeros((2, 2)))
    np.testing.assert_allclose(
        linalg.centered_covariance([[1, 0], [0, 1], [-1, 0], [0, -1]]), [[0.5, 0], [0, 0.5]]
    )


def test_centered_covariance_needs_two_rows():
    with pytest.raises(InsufficientData):
        linalg.centered_covariance([[1.0, 2.0]])


@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 4)), elements=st.floats(-1e3, 1e3)))
def test_centered_covariance_is_psd(rows):
    c = linalg.centered_covariance(rows)
    np.testing.assert_array_equal(c, c.T)
    assert linalg.min_pivot(c) >= -1e-10 * max(1.0, np.abs(c).max())
    np.testing.assert_allclose(c, np.cov(rows, rowvar=False, bias=True).reshape(c.shape), atol=1e-8 * (1 + np.abs(c).max()))
