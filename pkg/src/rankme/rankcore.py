"""Residual ranks, the linear rank statistic S_n(b) and Jaeckel's dispersion D_n(b).

For slope candidate b the residuals are r_i = Y*_i - w_i'b. With scores
a_n(1..n) summing to zero,

    S_n(b) = n^{-1/2} sum_i (w_i - wbar) a_n(R_i(b))
    D_n(b) = sum_i r_i a_n(R_i(b))

D_n is convex and piecewise linear in b and -n^{1/2} S_n(b) is a
subgradient of it. Neither depends on the intercept.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from ._backend import kernels
from .errors import DimensionMismatch, InvalidParameters, TiesPresent
from .scores import ScoreVector


@dataclass(frozen=True, eq=False)
class Latent:
    """Unobserved truth behind a simulated sample."""

    X: np.ndarray
    V: np.ndarray
    u: np.ndarray
    e: np.ndarray
    beta0: float
    beta: np.ndarray


@dataclass(eq=False)
class Sample:
    """Observed regressors ``W`` (n x p) and responses ``ystar`` (n,)."""

    W: np.ndarray
    ystar: np.ndarray
    latent: Optional[Latent] = field(default=None)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim == 1:
            W = W.reshape(-1, 1)
        y = np.asarray(self.ystar, dtype=float).reshape(-1)
        if W.ndim != 2 or W.shape[0] != y.size:
            raise DimensionMismatch(f"W has shape {W.shape}, ystar has {y.size} entries")
        n, p = W.shape
        if n < p + 2:
            raise InvalidParameters(f"need n >= p + 2, got n={n}, p={p}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(y))):
            raise InvalidParameters("sample contains non-finite values")
        self.W = np.ascontiguousarray(W)
        self.ystar = np.ascontiguousarray(y)
        if self.latent is not None:
            self._check_latent()

    def _check_latent(self):
        lt = self.latent
        fit = lt.beta0 + lt.X @ lt.beta + lt.e + lt.u
        scale = 1.0 + np.abs(fit)
        if np.max(np.abs(self.ystar - fit) / scale) > 1e-10:
            raise InvalidParameters("latent record inconsistent with ystar")
        if np.max(np.abs(self.W - (lt.X + lt.V)) / (1.0 + np.abs(self.W))) > 1e-10:
            raise InvalidParameters("latent record inconsistent with W")

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def p(self) -> int:
        return self.W.shape[1]

    @cached_property
    def Wc(self) -> np.ndarray:
        """Column-centered regressors."""
        return np.ascontiguousarray(self.W - self.W.mean(axis=0))

    def residuals(self, b) -> np.ndarray:
        return self.ystar - self.W @ _as_slope(b, self.p)

    def shifted(self, ystar) -> "Sample":
        """Same design, new responses; drops the latent record."""
        return Sample(self.W, ystar)


@dataclass(frozen=True, eq=False)
class RankVector:
    ranks: np.ndarray
    ties: bool


def _as_slope(b, p: int) -> np.ndarray:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.shape != (p,):
        raise DimensionMismatch(f"slope vector must have length {p}, got shape {b.shape}")
    return b


def _check_scores(sample: Sample, scores: ScoreVector) -> np.ndarray:
    a = scores.values if isinstance(scores, ScoreVector) else np.asarray(scores, dtype=float)
    if a.size != sample.n:
        raise DimensionMismatch(f"{a.size} scores for a sample of size {sample.n}")
    return np.ascontiguousarray(a, dtype=float)


def ranks_of(values) -> RankVector:
    ranks, ties = kernels.midranks(np.ascontiguousarray(values, dtype=float))
    if ties:
        warnings.warn("ties among residuals; midranks used", TiesPresent, stacklevel=3)
    return RankVector(ranks, bool(ties))


def residual_ranks(sample: Sample, b) -> RankVector:
    """Ranks of Y*_i - w_i'b; ties get midranks and set the ``ties`` flag."""
    return ranks_of(sample.residuals(b))


def linear_rank_statistic(sample: Sample, b, scores: ScoreVector) -> np.ndarray:
    """S_n(b) = n^{-1/2} sum (w_i - wbar) a_n(R_i(b)); tied blocks share mean scores."""
    a = _check_scores(sample, scores)
    s, _ = kernels.rank_statistic(sample.Wc, sample.residuals(b), a)
    return np.asarray(s)


def linear_rank_statistic_ties(sample: Sample, b, scores: ScoreVector):
    a = _check_scores(sample, scores)
    s, ties = kernels.rank_statistic(sample.Wc, sample.residuals(b), a)
    return np.asarray(s), bool(ties)


def jaeckel_dispersion(sample: Sample, b, scores: ScoreVector) -> float:
    """D_n(b) = sum_i (Y*_i - w_i'b) a_n(R_i(b))."""
    a = _check_scores(sample, scores)
    b = _as_slope(b, sample.p)
    return float(kernels.dispersion_at(sample.W, sample.ystar, b, a))


def rank_statistic_from_residuals(Wc: np.ndarray, resid: np.ndarray, scores) -> np.ndarray:
    """S_n for explicit residuals, e.g. the latent model errors."""
    a = np.ascontiguousarray(scores.values if isinstance(scores, ScoreVector) else scores, dtype=float)
    s, _ = kernels.rank_statistic(np.ascontiguousarray(Wc), np.ascontiguousarray(resid, dtype=float), a)
    return np.asarray(s)


def score_norm(s) -> float:
    return math.sqrt(float(np.dot(s, s)))
