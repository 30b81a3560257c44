import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special, stats

from rankme.errors import DomainError
from rankme.scores import (
    MEDIAN,
    VAN_DER_WAERDEN,
    WILCOXON,
    approximate_scores,
    expected_scores,
    get_score,
    phi,
    phi_square_integral,
)

ALL = [WILCOXON, VAN_DER_WAERDEN, MEDIAN]


def test_phi_examples():
    assert phi(WILCOXON, 0.5) == 0.0
    assert phi(WILCOXON, 0.75) == 0.25
    assert abs(phi(VAN_DER_WAERDEN, 0.975) - 1.959964) < 1e-5
    assert phi(MEDIAN, 0.3) == -0.5 and phi(MEDIAN, 0.7) == 0.5


@pytest.mark.parametrize("u", [0.0, 1.0, -1.0, 2.0, float("nan")])
def test_phi_domain(u):
    with pytest.raises(DomainError):
        phi(WILCOXON, u)


def test_aliases():
    assert get_score("vdw") == VAN_DER_WAERDEN
    assert get_score("sign") == MEDIAN
    assert VAN_DER_WAERDEN.name == "vdw"
    with pytest.raises(ValueError):
        get_score("savage")


@given(st.sampled_from(ALL), st.integers(1, 2**30 - 1))
def test_phi_skew_symmetric(sf, k):
    t = k / 2**30  # dyadic, so 1 - t is exact
    assert phi(sf, 1 - t) == -phi(sf, t)


@given(st.sampled_from(ALL), st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
def test_phi_nondecreasing(sf, a, b):
    lo, hi = min(a, b), max(a, b)
    assert phi(sf, lo) <= phi(sf, hi)


def test_approx_examples():
    np.testing.assert_allclose(approximate_scores(WILCOXON, 3).values, [-0.25, 0, 0.25], atol=1e-15)
    np.testing.assert_allclose(approximate_scores(MEDIAN, 4).values, [-0.5, -0.5, 0.5, 0.5])
    for sf in ALL:
        a = approximate_scores(sf, 2).values
        assert a[1] >= 0 and a[0] == pytest.approx(-a[1])


def test_expected_examples():
    a = expected_scores(VAN_DER_WAERDEN, 2).values
    np.testing.assert_allclose(a, [-1 / math.sqrt(math.pi), 1 / math.sqrt(math.pi)], atol=1e-6)
    np.testing.assert_allclose(expected_scores(MEDIAN, 3).values, [-3 / 8, 0, 3 / 8], atol=1e-9)
    for n in (2, 5, 17, 60):
        np.testing.assert_allclose(expected_scores(WILCOXON, n).values, approximate_scores(WILCOXON, n).values, atol=1e-12)


@pytest.mark.parametrize("n", [4, 9, 25])
def test_expected_vdw_against_order_statistic_oracle(n):
    # E Z_(i) by direct integration of z times the order-statistic density of a standard normal
    a = expected_scores(VAN_DER_WAERDEN, n).values
    for i in (1, n // 2 + 1, n):
        logc = special.gammaln(n + 1) - special.gammaln(i) - special.gammaln(n - i + 1)

        def dens(z):
            return z * math.exp(logc + (i - 1) * special.log_ndtr(z) + (n - i) * special.log_ndtr(-z)) * stats.norm.pdf(z)

        ref = integrate.quad(dens, -np.inf, np.inf, epsabs=1e-12)[0]
        assert a[i - 1] == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("sf", ALL, ids=str)
@pytest.mark.parametrize("build", [approximate_scores, expected_scores], ids=["approx", "expected"])
@pytest.mark.parametrize("n", [2, 3, 10, 51, 200])
def test_score_vector_invariants(sf, build, n):
    a = build(sf, n).values
    assert a.size == n
    assert np.all(np.diff(a) >= -1e-12)
    assert abs(a.sum()) <= 1e-12 * max(1, n)
    np.testing.assert_allclose(a, -a[::-1], atol=1e-8)


def test_phi_square_integrals():
    assert phi_square_integral(WILCOXON) == pytest.approx(1 / 12, abs=1e-8)
    assert phi_square_integral(MEDIAN) == pytest.approx(1 / 4, abs=1e-8)
    assert phi_square_integral(VAN_DER_WAERDEN) == pytest.approx(1.0, abs=1e-8)


def test_scaled():
    a = approximate_scores(WILCOXON, 5)
    np.testing.assert_allclose(a.scaled(3).values, 3 * a.values)
