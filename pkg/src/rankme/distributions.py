"""Seeded samplers and density/CDF/quantile evaluators.

Every law used by the simulation tables lives here: uniform, normal,
logistic, Laplace, Pareto, Cauchy, a point mass, and the multivariate
normal. The second parameter of ``Normal`` is a standard deviation.

Random numbers come from numpy's PCG64 bit generator, which is documented
and reproducible across platforms. Closed-form laws are sampled by
inverse CDF from uniforms on the open interval (0, 1); the normal uses
numpy's standard normal generator plus location-scale.
"""

from __future__ import annotations

import ast
import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import linalg
from .errors import DomainError, InvalidParameters, SingularMatrix

KINDS = ("uniform", "normal", "logistic", "laplace", "pareto", "cauchy", "degenerate")

_PARAM_COUNT = {
    "uniform": 2,
    "normal": 2,
    "logistic": 2,
    "laplace": 2,
    "pareto": 1,
    "cauchy": 2,
    "degenerate": 1,
}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def stable_key(text: str) -> int:
    """32-bit key derived from ``text``; stable across processes and platforms."""
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "little")


def substream(seed: int, *keys) -> np.random.Generator:
    """Independent generator for (seed, keys...), e.g. one per replication."""
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        words.append(stable_key(k) if isinstance(k, str) else int(k))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def open_uniform(rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniforms strictly inside (0, 1) on the 2^-53 grid midpoints."""
    k = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return (k + 0.5) / 2.0**53


@dataclass(frozen=True)
class Distribution:
    """A univariate law; ``params`` are in the order of the literal form."""

    kind: str
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in _PARAM_COUNT:
            raise InvalidParameters(f"unknown distribution kind {self.kind!r}")
        params = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", params)
        if len(params) != _PARAM_COUNT[kind]:
            raise InvalidParameters(
                f"{kind} takes {_PARAM_COUNT[kind]} parameters, got {len(params)}"
            )
        if not all(math.isfinite(x) for x in params):
            raise InvalidParameters(f"{kind}{params}: non-finite parameter")
        if kind == "uniform" and not params[0] < params[1]:
            raise InvalidParameters(f"uniform needs a < b, got {params}")
        if kind in ("normal", "logistic", "laplace", "cauchy") and params[1] <= 0:
            raise InvalidParameters(f"{kind} needs scale > 0, got {params[1]}")
        if kind == "pareto" and params[0] <= 0:
            raise InvalidParameters(f"pareto needs alpha > 0, got {params[0]}")

    # -- descriptive -----------------------------------------------------
    @property
    def literal(self) -> str:
        return f"{self.kind}({','.join(_fmt(x) for x in self.params)})"

    def __str__(self) -> str:
        return self.literal

    @property
    def continuous(self) -> bool:
        return self.kind != "degenerate"

    @property
    def location(self) -> float:
        return 1.0 if self.kind == "pareto" else self.params[0]

    @property
    def support(self) -> tuple[float, float]:
        k, p = self.kind, self.params
        if k == "uniform":
            return p[0], p[1]
        if k == "pareto":
            return 1.0, math.inf
        if k == "degenerate":
            return p[0], p[0]
        return -math.inf, math.inf

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Points where the density or its derivative is not smooth."""
        k, p = self.kind, self.params
        if k == "uniform":
            return p[0], p[1]
        if k == "laplace":
            return (p[0],)
        if k == "pareto":
            return (1.0,)
        return ()

    def mean(self) -> float:
        k, p = self.kind, self.params
        if k == "uniform":
            return (p[0] + p[1]) / 2
        if k == "pareto":
            return p[0] / (p[0] - 1) if p[0] > 1 else math.inf
        if k == "cauchy":
            return math.nan
        return p[0]

    def variance(self) -> float:
        k, p = self.kind, self.params
        if k == "uniform":
            return (p[1] - p[0]) ** 2 / 12.0
        if k == "normal":
            return p[1] ** 2
        if k == "logistic":
            return (math.pi * p[1]) ** 2 / 3.0
        if k == "laplace":
            return 2.0 * p[1] ** 2
        if k == "pareto":
            a = p[0]
            return a / ((a - 1) ** 2 * (a - 2)) if a > 2 else math.inf
        if k == "cauchy":
            return math.inf
        return 0.0

    @property
    def smooth_density(self) -> bool:
        """True when the density is absolutely continuous on the real line."""
        return self.kind in ("normal", "logistic", "laplace", "cauchy")

    # -- evaluators ------------------------------------------------------
    def _std(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind in ("normal", "logistic", "laplace", "cauchy"):
            return (x - self.params[0]) / self.params[1]
        return x

    def pdf(self, x):
        k, p = self.kind, self.params
        x = np.asarray(x, dtype=float)
        if k == "degenerate":
            raise DomainError("point mass has no density")
        if k == "uniform":
            out = np.where((x >= p[0]) & (x <= p[1]), 1.0 / (p[1] - p[0]), 0.0)
        elif k == "pareto":
            a = p[0]
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(x >= 1.0, a * np.power(np.maximum(x, 1.0), -a - 1), 0.0)
        else:
            z = self._std(x)
            s = p[1]
            if k == "normal":
                out = np.exp(-0.5 * z * z) / (s * math.sqrt(2 * math.pi))
            elif k == "logistic":
                t = np.exp(-np.abs(z))
                out = t / (s * (1.0 + t) ** 2)
            elif k == "laplace":
                out = np.exp(-np.abs(z)) / (2.0 * s)
            else:
                out = 1.0 / (math.pi * s * (1.0 + z * z))
        return out[()] if out.ndim == 0 else out

    def dlogpdf(self, x):
        """Derivative of log-density (location score up to sign)."""
        k, p = self.kind, self.params
        x = np.asarray(x, dtype=float)
        if k in ("degenerate",):
            raise DomainError("point mass has no density")
        if k == "uniform":
            out = np.zeros_like(x)
        elif k == "pareto":
            out = np.where(x >= 1.0, -(p[0] + 1) / np.maximum(x, 1.0), 0.0)
        else:
            z = self._std(x)
            s = p[1]
            if k == "normal":
                out = -z / s
            elif k == "logistic":
                out = -np.tanh(z / 2.0) / s
            elif k == "laplace":
                out = -np.sign(z) / s
            else:
                out = -2.0 * z / (s * (1.0 + z * z))
        return out[()] if out.ndim == 0 else out

    def dpdf(self, x):
        return self.pdf(x) * self.dlogpdf(x)

    def cdf(self, x):
        k, p = self.kind, self.params
        x = np.asarray(x, dtype=float)
        if k == "degenerate":
            out = np.where(x >= p[0], 1.0, 0.0)
        elif k == "uniform":
            out = np.clip((x - p[0]) / (p[1] - p[0]), 0.0, 1.0)
        elif k == "pareto":
            out = np.where(x > 1.0, -np.expm1(-p[0] * np.log(np.maximum(x, 1.0))), 0.0)
        else:
            z = self._std(x)
            if k == "normal":
                out = special.ndtr(z)
            elif k == "logistic":
                out = special.expit(z)
            elif k == "laplace":
                out = np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0)), 1 - 0.5 * np.exp(-np.maximum(z, 0)))
            else:
                out = 0.5 + np.arctan(z) / math.pi
        return out[()] if out.ndim == 0 else out

    def sf(self, x):
        """Survival function 1 - cdf, accurate in the upper tail."""
        k, p = self.kind, self.params
        x = np.asarray(x, dtype=float)
        if k in ("normal", "logistic", "laplace", "cauchy"):
            z = self._std(x)
            if k == "normal":
                out = special.ndtr(-z)
            elif k == "logistic":
                out = special.expit(-z)
            elif k == "laplace":
                out = np.where(z > 0, 0.5 * np.exp(-np.maximum(z, 0)), 1 - 0.5 * np.exp(np.minimum(z, 0)))
            else:
                out = 0.5 - np.arctan(z) / math.pi
            return out[()] if out.ndim == 0 else out
        if k == "pareto":
            out = np.where(x > 1.0, np.power(np.maximum(x, 1.0), -p[0]), 1.0)
            return out[()] if out.ndim == 0 else out
        return 1.0 - self.cdf(x)

    def quantile(self, q):
        k, p = self.kind, self.params
        q = np.asarray(q, dtype=float)
        if np.any((q <= 0) | (q >= 1)) or np.any(np.isnan(q)):
            raise DomainError("quantile probability must lie strictly inside (0, 1)")
        if k == "degenerate":
            out = np.full_like(q, p[0])
        elif k == "uniform":
            out = p[0] + q * (p[1] - p[0])
        elif k == "pareto":
            out = np.exp(-np.log1p(-q) / p[0])
        elif k == "normal":
            out = p[0] + p[1] * special.ndtri(q)
        elif k == "logistic":
            out = p[0] + p[1] * special.logit(q)
        elif k == "laplace":
            out = p[0] - p[1] * np.sign(q - 0.5) * np.log1p(-2.0 * np.abs(q - 0.5))
        else:
            out = p[0] + p[1] * np.tan(math.pi * (q - 0.5))
        return out[()] if out.ndim == 0 else out

    # -- sampling --------------------------------------------------------
    def sample_n(self, rng: np.random.Generator, size) -> np.ndarray:
        k, p = self.kind, self.params
        if k == "degenerate":
            return np.full(size, p[0])
        if k == "normal":
            return p[0] + p[1] * rng.standard_normal(size)
        return np.asarray(self.quantile(open_uniform(rng, size)), dtype=float)

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.sample_n(rng, 1)[0])


@dataclass(frozen=True, eq=False)
class MvNormal:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = linalg.as_matrix(self.cov)
        if cov.shape != (mean.size, mean.size):
            raise InvalidParameters(f"mean length {mean.size} vs covariance {cov.shape}")
        try:
            low = linalg.cholesky(cov)
        except SingularMatrix as exc:
            raise InvalidParameters(f"covariance is not positive definite: {exc}") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_low", low)

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def literal(self) -> str:
        m = ",".join(_fmt(x) for x in self.mean)
        c = ",".join("[" + ",".join(_fmt(x) for x in row) + "]" for row in self.cov)
        return f"mvnormal([{m}],[{c}])"

    def __str__(self) -> str:
        return self.literal

    def __eq__(self, other):
        return (
            isinstance(other, MvNormal)
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.cov, other.cov)
        )

    def __hash__(self):
        return hash(self.literal)

    def variance_matrix(self) -> np.ndarray:
        return self.cov.copy()

    def sample_n(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, self.dim))
        return self.mean + z @ self._low.T

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_n(rng, 1)[0]


# -- literals --------------------------------------------------------------

_LITERAL = re.compile(r"^\s*([A-Za-z_]+)\s*\((.*)\)\s*$", re.S)
_ALIASES = {"n": "normal", "gauss": "normal", "gaussian": "normal", "u": "uniform", "point": "degenerate"}


def parse_law(text):
    """Parse a literal such as ``normal(0,2)`` or ``mvnormal([0,1],[[1,0],[0,1]])``.

    ``none``, ``0`` and the empty string mean "no law" and give ``None``.
    """
    if text is None:
        return None
    if isinstance(text, (Distribution, MvNormal)):
        return text
    s = str(text).strip()
    if s.lower() in ("", "none", "0", "zero"):
        return None
    m = _LITERAL.match(s)
    if not m:
        raise InvalidParameters(f"cannot parse distribution literal {text!r}")
    name = m.group(1).lower()
    name = _ALIASES.get(name, name)
    try:
        args = ast.literal_eval("(" + m.group(2) + ",)") if m.group(2).strip() else ()
    except (ValueError, SyntaxError) as exc:
        raise InvalidParameters(f"bad arguments in {text!r}") from exc
    if name == "mvnormal":
        if len(args) != 2:
            raise InvalidParameters(f"mvnormal takes (mean, cov), got {text!r}")
        return MvNormal(np.asarray(args[0], dtype=float), np.asarray(args[1], dtype=float))
    if name not in KINDS:
        raise InvalidParameters(f"unknown distribution {name!r}")
    try:
        return Distribution(name, tuple(float(a) for a in args))
    except TypeError as exc:
        raise InvalidParameters(f"non-numeric arguments in {text!r}") from exc


def law_literal(law) -> str:
    return "none" if law is None else law.literal


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)
