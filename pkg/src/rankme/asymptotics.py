"""Asymptotic bias, attenuation and variance of the R-estimator.

Under local slopes beta_n = n^{-1/2} beta0, n^{1/2}(betahat - beta_n) is
asymptotically N_p(B, (Q+V)^{-1} A^2) with

    B   = -(Q+V)^{-1} V beta0
    A^2 = gamma^{-2} int_0^1 phi(u)^2 du
    gamma = -int phi(M(z)) m'(z) dz

where Q, V are the covariances of the true regressors and of their
measurement errors, and m, M are the density and CDF of e + u (model error
plus response measurement error). B involves neither phi nor m.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize

from . import linalg
from .distributions import Distribution, MvNormal
from .errors import InfiniteFisherInfo, QuadratureFailure, SingularMatrix, UnsupportedLaw
from .scores import ScoreFunction, _phi_raw, get_score, phi_square_integral

GAMMA_TOL = 1e-6
_MIX_NODES = 160


@dataclass
class AsymptoticSummary:
    Q: np.ndarray
    V: np.ndarray
    beta0_vec: np.ndarray
    bias: np.ndarray
    attenuation: np.ndarray
    gamma_m: Optional[float]
    A_m_sq: Optional[float]
    asym_cov: Optional[np.ndarray]
    score: str = "wilcoxon"
    note: str = ""

    def as_dict(self) -> dict:
        def mat(m):
            return None if m is None else [[float(x) for x in row] for row in np.atleast_2d(m)]

        def opt(x):
            return None if x is None else float(x)

        return {
            "Q": mat(self.Q),
            "V": mat(self.V),
            "beta0_vec": [float(x) for x in self.beta0_vec],
            "bias": [float(x) for x in self.bias],
            "attenuation": mat(self.attenuation),
            "gamma_m": opt(self.gamma_m),
            "A_m_sq": opt(self.A_m_sq),
            "asym_cov": mat(self.asym_cov),
            "score": self.score,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AsymptoticSummary":
        def arr(x):
            return None if x is None else np.asarray(x, dtype=float)

        return cls(
            Q=arr(d["Q"]),
            V=arr(d["V"]),
            beta0_vec=arr(d["beta0_vec"]),
            bias=arr(d["bias"]),
            attenuation=arr(d["attenuation"]),
            gamma_m=d.get("gamma_m"),
            A_m_sq=d.get("A_m_sq"),
            asym_cov=arr(d.get("asym_cov")),
            score=d.get("score", "wilcoxon"),
            note=d.get("note", ""),
        )


def _qv(Q, V):
    Q = linalg.check_symmetric(Q)
    V = linalg.check_symmetric(V)
    if Q.shape != V.shape:
        raise ValueError(f"Q {Q.shape} and V {V.shape} differ in shape")
    QV = Q + V
    if not linalg.is_positive_definite(QV):
        raise SingularMatrix("Q + V is not positive definite")
    return Q, V, QV


def asymptotic_bias(Q, V, beta0_vec) -> np.ndarray:
    """B = -(Q+V)^{-1} V beta0."""
    Q, V, QV = _qv(Q, V)
    beta0_vec = np.atleast_1d(np.asarray(beta0_vec, dtype=float))
    return -linalg.invert(QV) @ (V @ beta0_vec)


def attenuation(Q, V) -> np.ndarray:
    """(Q+V)^{-1} Q, the limit of betahat relative to the true slope."""
    Q, V, QV = _qv(Q, V)
    return linalg.invert(QV) @ Q


def asymptotic_covariance(Q, V, A_m_sq: float) -> np.ndarray:
    Q, V, QV = _qv(Q, V)
    if not A_m_sq > 0:
        raise ValueError(f"A_m^2 must be positive, got {A_m_sq}")
    out = linalg.invert(QV) * A_m_sq
    return (out + out.T) / 2.0


class Precision(enum.Enum):
    FIRST_MORE_PRECISE = "FirstMorePrecise"
    SECOND_MORE_PRECISE = "SecondMorePrecise"
    INCOMPARABLE = "Incomparable"


def precision_order(Q, V1, V2) -> Precision:
    """Compare two measurement methods by (V1+Q)^{-1} - (V2+Q)^{-1} being PD.

    That difference is PD exactly when V2 - V1 is, which is what is tested.
    """
    Q, V1, _ = _qv(Q, V1)
    _, V2, _ = _qv(Q, V2)
    if linalg.is_positive_definite(V2 - V1):
        return Precision.FIRST_MORE_PRECISE
    if linalg.is_positive_definite(V1 - V2):
        return Precision.SECOND_MORE_PRECISE
    return Precision.INCOMPARABLE


# -- gamma and friends ------------------------------------------------------


class ErrorLaw:
    """Density m, derivative m' and CDF M of e + u, where u ~ h is optional.

    With a nondegenerate h the convolution integrals over h are done with a
    fixed Gauss rule: Gauss-Hermite for a normal h, otherwise Gauss-Legendre
    in the quantile variable of h, split at the median.
    """

    def __init__(self, f: Distribution, h: Optional[Distribution] = None):
        if not isinstance(f, Distribution) or not f.continuous:
            raise InfiniteFisherInfo(f"model error law {f} has no density")
        self.f = f
        shift = 0.0
        if h is not None and not h.continuous:
            shift, h = h.params[0], None
        self.h = h
        self.shift = shift
        if h is None:
            self.nodes = np.array([shift])
            self.weights = np.array([1.0])
        elif h.kind == "normal":
            z, wt = hermegauss(_MIX_NODES)
            self.nodes = h.params[0] + h.params[1] * z
            self.weights = wt / math.sqrt(2 * math.pi)
        else:
            x, wt = leggauss(_MIX_NODES // 2)
            s = np.concatenate([0.25 * (x + 1.0), 0.5 + 0.25 * (x + 1.0)])
            self.nodes = np.asarray(h.quantile(s), dtype=float)
            self.weights = np.concatenate([wt, wt]) * 0.25

    @property
    def exact(self) -> bool:
        return self.h is None

    def _mix(self, fun, z):
        z = np.asarray(z, dtype=float)
        vals = fun(z[..., None] - self.nodes)
        return vals @ self.weights

    def pdf(self, z):
        return self._mix(self.f.pdf, z)

    def dpdf(self, z):
        return self._mix(self.f.dpdf, z)

    def cdf(self, z):
        return self._mix(self.f.cdf, z)

    def sf(self, z):
        return self._mix(self.f.sf, z)

    def median(self) -> float:
        if self.h is None:
            return float(self.f.quantile(0.5)) + self.shift
        lo, hi = float(self.nodes.min()) - 50.0, float(self.nodes.max()) + 50.0
        if self.f.kind == "pareto":
            lo = float(self.nodes.min()) + 1.0
        return optimize.brentq(lambda z: float(self.cdf(z)) - 0.5, lo, hi, xtol=1e-14)

    def breakpoints(self) -> list:
        if self.h is None:
            return [b + self.shift for b in self.f.breakpoints]
        return []


def _require_fisher(f: Distribution) -> None:
    if not f.smooth_density:
        raise InfiniteFisherInfo(f"{f} has a discontinuous density; Fisher information is infinite")


def gamma_m(f: Distribution, h: Optional[Distribution], sf) -> float:
    """gamma = -int phi(M(z)) m'(z) dz for the law of e + u.

    ``h = None`` means no response measurement error, so m = f.

    Raises
    ------
    InfiniteFisherInfo
        If f has jumps (uniform, Pareto) so m' is not a function.
    QuadratureFailure
        If the error estimate exceeds 1e-6.
    """
    sf = get_score(sf)
    _require_fisher(f)
    law = ErrorLaw(f, h)
    med = law.median()

    def integrand_lower(z):
        u = float(law.cdf(z))
        if u <= 0.0:
            return 0.0
        return -float(_phi_raw(sf.kind, u)) * float(law.dpdf(z))

    def integrand_upper(z):
        v = float(law.sf(z))
        if v <= 0.0:
            return 0.0
        # phi(1 - v) = -phi(v) keeps precision in the upper tail
        return float(_phi_raw(sf.kind, v)) * float(law.dpdf(z))

    total, err = 0.0, 0.0
    pts_lo = sorted(b for b in law.breakpoints() if b < med)
    pts_hi = sorted(b for b in law.breakpoints() if b > med)
    for fun, segs in ((integrand_lower, _segments(-np.inf, med, pts_lo)), (integrand_upper, _segments(med, np.inf, pts_hi))):
        for a, b in segs:
            val, e = integrate.quad(fun, a, b, epsabs=1e-11, epsrel=1e-11, limit=400)
            total += val
            err += e
    if not math.isfinite(total) or err > GAMMA_TOL:
        raise QuadratureFailure(f"gamma quadrature error estimate {err:.2e}")
    return total


def _segments(a, b, pts):
    edges = [a] + list(pts) + [b]
    return list(zip(edges[:-1], edges[1:]))


def efficiency_factor(sf, gamma: float) -> float:
    """A^2 = (int phi^2) / gamma^2."""
    sf = get_score(sf)
    if abs(gamma) < 1e-12:
        raise ZeroDivisionError("gamma is numerically zero")
    return phi_square_integral(sf) / gamma**2


# -- theoretical column for a ModelSpec ------------------------------------


def law_covariance(law, p: int, role: str) -> np.ndarray:
    """Covariance matrix of a regressor or measurement-error law.

    A scalar law in dimension p means p independent copies.
    """
    if law is None:
        return np.zeros((p, p))
    if isinstance(law, MvNormal):
        if law.dim != p:
            raise ValueError(f"{role} law has dimension {law.dim}, model has p={p}")
        return law.variance_matrix()
    if isinstance(law, np.ndarray):
        return linalg.centered_covariance(law)
    var = law.variance()
    if not math.isfinite(var):
        raise UnsupportedLaw(f"{role} law {law} has no finite variance")
    return np.eye(p) * var


def summarize(Q, V, beta0_vec, f=None, h=None, sf="wilcoxon") -> AsymptoticSummary:
    """Bundle bias, attenuation and (when computable) gamma, A^2 and covariance."""
    sf = get_score(sf)
    Q = linalg.as_matrix(Q)
    V = linalg.as_matrix(V)
    beta0_vec = np.atleast_1d(np.asarray(beta0_vec, dtype=float))
    bias = asymptotic_bias(Q, V, beta0_vec)
    att = attenuation(Q, V)
    g = a2 = cov = None
    note = ""
    if f is not None:
        try:
            g = gamma_m(f, h, sf)
            a2 = efficiency_factor(sf, g)
            cov = asymptotic_covariance(Q, V, a2)
        except InfiniteFisherInfo as exc:
            note = str(exc)
    return AsymptoticSummary(Q, V, beta0_vec, bias, att, g, a2, cov, sf.name, note)


def theoretical_column(spec, sf="wilcoxon") -> AsymptoticSummary:
    """Population Q and V from the model's laws, then the full summary.

    Q comes from the regressor law (or the realized Q_n of an explicit fixed
    design matrix); V from the measurement-error law.

    Raises
    ------
    UnsupportedLaw
        If the regressor or measurement-error law lacks a finite variance.
    """
    return summarize(spec.q_matrix(), spec.v_matrix(), spec.beta, spec.e_law, spec.u_law, sf)


# -- Fisher information and Hellinger distance -----------------------------


def fisher_information(f: Distribution) -> float:
    """I(f) = int (f'/f)^2 f dx."""
    _require_fisher(f)
    center = f.location
    pts = sorted(set(f.breakpoints) | {center})
    total, err = 0.0, 0.0
    for a, b in _segments(-np.inf, np.inf, pts):
        val, e = integrate.quad(lambda x: float(f.dlogpdf(x)) ** 2 * float(f.pdf(x)), a, b, epsabs=1e-12, epsrel=1e-12, limit=400)
        total += val
        err += e
    if not math.isfinite(total) or total > 1e12:
        raise InfiniteFisherInfo(f"Fisher information of {f} diverges")
    if err > 1e-6:
        raise QuadratureFailure(f"Fisher information error estimate {err:.2e}")
    return total


def hellinger_sq(p, q) -> float:
    """H^2 = int (sqrt p - sqrt q)^2, which lies in [0, 2].

    ``p`` and ``q`` are Distributions or any object with a vectorized
    ``pdf`` plus optional ``breakpoints``/``support`` hints.
    """
    pts = set()
    for d in (p, q):
        for b in getattr(d, "breakpoints", ()) or ():
            pts.add(float(b))
        sup = getattr(d, "support", None)
        if sup is not None:
            for b in sup:
                if math.isfinite(b):
                    pts.add(float(b))
        loc = getattr(d, "location", None)
        if loc is not None and math.isfinite(loc):
            pts.add(float(loc))

    def integrand(x):
        return (math.sqrt(float(p.pdf(x))) - math.sqrt(float(q.pdf(x)))) ** 2

    total, err = 0.0, 0.0
    for a, b in _segments(-np.inf, np.inf, sorted(pts)):
        val, e = integrate.quad(integrand, a, b, epsabs=1e-12, epsrel=1e-10, limit=400)
        total += val
        err += e
    if err > 1e-8:
        raise QuadratureFailure(f"Hellinger quadrature error estimate {err:.2e}")
    return min(max(total, 0.0), 2.0)


class ShiftMixture:
    """Density of e + s*U with e ~ f and U ~ k: a scale mixture of location shifts."""

    def __init__(self, f: Distribution, k: Distribution, scale: float):
        if k.kind == "degenerate":
            k = Distribution("degenerate", (k.params[0] * scale,))
        elif k.kind == "normal":
            k = Distribution("normal", (k.params[0] * scale, k.params[1] * scale))
        elif k.kind == "uniform":
            k = Distribution("uniform", (k.params[0] * scale, k.params[1] * scale))
        else:
            raise ValueError(f"shift law {k} not supported for mixtures")
        self._law = ErrorLaw(f, k)
        self.location = f.location
        self.breakpoints = ()
        self.support = (-math.inf, math.inf)

    def pdf(self, x):
        return self._law.pdf(x)
