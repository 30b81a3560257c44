"""Score-generating functions and the scores a_n(1..n) they produce.

Two constructions are supported: approximate scores phi(i/(n+1)) and
expected scores E phi(U_{n:i}), the mean of phi at the i-th uniform order
statistic. Both are re-centered to sum to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special, stats

from .errors import DomainError, QuadratureFailure

EXPECTED_TOL = 1e-9


@dataclass(frozen=True)
class ScoreFunction:
    """A nondecreasing, skew-symmetric, square-integrable phi on (0, 1)."""

    kind: str

    def __post_init__(self):
        kind = SCORE_ALIASES.get(self.kind.lower())
        if kind is None:
            raise ValueError(f"unknown score function {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    @property
    def name(self) -> str:
        return {"wilcoxon": "wilcoxon", "vanderwaerden": "vdw", "median": "median"}[self.kind]

    def __call__(self, u):
        return phi(self, u)

    def __str__(self) -> str:
        return self.name


SCORE_ALIASES = {
    "wilcoxon": "wilcoxon",
    "vdw": "vanderwaerden",
    "vanderwaerden": "vanderwaerden",
    "van_der_waerden": "vanderwaerden",
    "normal": "vanderwaerden",
    "median": "median",
    "sign": "median",
}

WILCOXON = ScoreFunction("wilcoxon")
VAN_DER_WAERDEN = ScoreFunction("vanderwaerden")
MEDIAN = ScoreFunction("median")


def get_score(name) -> ScoreFunction:
    if isinstance(name, ScoreFunction):
        return name
    return ScoreFunction(str(name))


def _phi_raw(kind: str, u):
    if kind == "wilcoxon":
        return u - 0.5
    if kind == "vanderwaerden":
        return special.ndtri(u)
    return 0.5 * np.sign(u - 0.5)


def phi(sf: ScoreFunction, u):
    """Evaluate phi(u); skew-symmetry holds exactly for all three kinds."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)) or np.any(np.isnan(u)):
        raise DomainError("score function argument must lie strictly inside (0, 1)")
    out = _phi_raw(sf.kind, u)
    return out[()] if np.ndim(out) == 0 else out


@lru_cache(maxsize=None)
def phi_square_integral(sf: ScoreFunction) -> float:
    """Integral of phi^2 over (0, 1)."""
    if sf.kind == "wilcoxon":
        return 1.0 / 12.0
    if sf.kind == "median":
        return 0.25
    # vdW: E Z^2 for a standard normal; integrated to keep the route numeric
    val, err = integrate.quad(lambda z: z * z * math.exp(-0.5 * z * z), -np.inf, np.inf, epsabs=1e-13)
    return val / math.sqrt(2 * math.pi)


@dataclass(frozen=True, eq=False)
class ScoreVector:
    values: np.ndarray
    construction: str
    kind: str

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def scaled(self, factor: float) -> "ScoreVector":
        return ScoreVector(self.values * factor, self.construction, self.kind)


def _center(values: np.ndarray) -> np.ndarray:
    return values - values.mean()


@lru_cache(maxsize=256)
def _approx_cached(kind: str, n: int) -> np.ndarray:
    u = np.arange(1, n + 1) / (n + 1.0)
    vals = _center(np.asarray(_phi_raw(kind, u), dtype=float))
    vals.setflags(write=False)
    return vals


def approximate_scores(sf, n: int) -> ScoreVector:
    sf = get_score(sf)
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return ScoreVector(_approx_cached(sf.kind, int(n)), "approx", sf.kind)


def _expected_one(kind: str, i: int, n: int) -> float:
    a, b = i, n - i + 1
    lbeta = special.betaln(a, b)
    if kind == "vanderwaerden":
        # integrate in z = Phi^{-1}(u); removes the endpoint singularity of phi
        def integrand(z):
            return z * math.exp(
                (a - 1) * special.log_ndtr(z) + (b - 1) * special.log_ndtr(-z) - 0.5 * z * z - lbeta
            ) / math.sqrt(2 * math.pi)

        lo = special.ndtri(stats.beta.ppf(1e-15, a, b)) if a > 1 else -40.0
        hi = special.ndtri(stats.beta.isf(1e-15, a, b)) if b > 1 else 40.0
        lo, hi = max(lo, -40.0), min(hi, 40.0)
        mode = special.ndtri((a - 1) / (n - 1)) if 1 < a < n else None
        pts = [mode] if mode is not None and lo < mode < hi else None
        val, err = integrate.quad(integrand, lo, hi, points=pts, epsabs=1e-12, epsrel=1e-12, limit=200)
    else:
        def integrand(u):
            return _phi_raw(kind, u) * math.exp((a - 1) * math.log(u) + (b - 1) * math.log1p(-u) - lbeta)

        lo = float(stats.beta.ppf(1e-16, a, b))
        hi = float(stats.beta.isf(1e-16, a, b))
        lo, hi = max(lo, 1e-300), min(hi, 1 - 1e-16)
        pts = [p for p in (0.5, (a - 1) / (n - 1)) if lo < p < hi]
        val, err = integrate.quad(integrand, lo, hi, points=pts or None, epsabs=1e-12, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > EXPECTED_TOL:
        raise QuadratureFailure(f"expected score i={i}, n={n}: error estimate {err:.2e}")
    return val


@lru_cache(maxsize=64)
def _expected_cached(kind: str, n: int) -> np.ndarray:
    vals = _center(np.array([_expected_one(kind, i, n) for i in range(1, n + 1)]))
    vals.setflags(write=False)
    return vals


def expected_scores(sf, n: int) -> ScoreVector:
    """Scores a_n(i) = E phi(U_{n:i}) by adaptive quadrature against the Beta(i, n-i+1) density."""
    sf = get_score(sf)
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return ScoreVector(_expected_cached(sf.kind, int(n)), "expected", sf.kind)


def make_scores(sf, n: int, construction: str = "approx") -> ScoreVector:
    if construction == "approx":
        return approximate_scores(sf, n)
    if construction == "expected":
        return expected_scores(sf, n)
    raise ValueError(f"score construction must be 'approx' or 'expected', got {construction!r}")
