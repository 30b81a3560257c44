"""Data generation for the measurement-error regression model and the Monte Carlo engine.

The model is

    Y_i  = beta0 + x_i'beta + e_i          (true response)
    w_i  = x_i + v_i                       (observed regressors)
    Y*_i = Y_i + u_i                       (observed response)

Each replication draws from its own PCG64 stream keyed by (seed, scenario,
replication index). Results therefore do not depend on how replications are
scheduled across worker processes.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import linalg
from .asymptotics import AsymptoticSummary, law_covariance, summarize
from .distributions import Distribution, MvNormal, law_literal, parse_law, substream
from .errors import InvalidParameters, MonteCarloFailure, RankMEError, UnsupportedLaw
from .estimators import ESTIMATOR_NAMES, ROptions, estimate
from .rankcore import Latent, Sample
from .scores import get_score, make_scores

MAX_FAILURE_FRACTION = 0.01


@dataclass(frozen=True, eq=False)
class Fixed:
    """An explicit n x p regressor matrix used in every replication."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim == 1:
            m = m.reshape(-1, 1)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def literal(self) -> str:
        return f"fixed({self.matrix.shape[0]}x{self.matrix.shape[1]})"


@dataclass(frozen=True)
class Random:
    """Regressors drawn from ``law`` (a scalar law means iid coordinates)."""

    law: Union[Distribution, MvNormal]

    @property
    def dim(self) -> Optional[int]:
        return self.law.dim if isinstance(self.law, MvNormal) else None

    @property
    def literal(self) -> str:
        return self.law.literal


DESIGN_MODES = ("deterministic", "random")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Recipe for one scenario.

    ``design_mode="deterministic"`` with a ``Random`` regressor law draws the
    design once per master seed and reuses it in every replication. Designs
    for different ``n`` are prefixes of one sequence, so all sample sizes see
    the same leading regressors.
    """

    n: int
    beta: tuple
    e_law: Distribution
    x_law: Union[Fixed, Random]
    v_law: Union[Distribution, MvNormal, None] = None
    u_law: Optional[Distribution] = None
    beta0: float = 1.0
    design_mode: str = "random"

    def __post_init__(self):
        beta = tuple(float(b) for b in np.atleast_1d(self.beta))
        object.__setattr__(self, "beta", beta)
        x = self.x_law
        if isinstance(x, (Distribution, MvNormal)):
            x = Random(x)
        elif isinstance(x, (np.ndarray, list)):
            x = Fixed(np.asarray(x, dtype=float))
        object.__setattr__(self, "x_law", x)
        if self.design_mode not in DESIGN_MODES:
            raise InvalidParameters(f"design_mode must be one of {DESIGN_MODES}, got {self.design_mode!r}")
        p = len(beta)
        if p < 1:
            raise InvalidParameters("beta must have at least one coordinate")
        if self.n < p + 2:
            raise InvalidParameters(f"need n >= p + 2, got n={self.n}, p={p}")
        if isinstance(x, Fixed) and x.matrix.shape != (self.n, p):
            raise InvalidParameters(f"fixed design has shape {x.matrix.shape}, expected ({self.n}, {p})")
        for name, law in (("x", getattr(x, "law", None)), ("v", self.v_law)):
            if isinstance(law, MvNormal) and law.dim != p:
                raise InvalidParameters(f"{name} law has dimension {law.dim}, beta has {p}")
        if isinstance(self.u_law, MvNormal) or isinstance(self.e_law, MvNormal):
            raise InvalidParameters("response errors must be scalar laws")
        if not isinstance(self.e_law, Distribution):
            raise InvalidParameters("e_law is required")

    @property
    def p(self) -> int:
        return len(self.beta)

    def with_(self, **changes) -> "ModelSpec":
        fields = dict(
            n=self.n,
            beta=self.beta,
            e_law=self.e_law,
            x_law=self.x_law,
            v_law=self.v_law,
            u_law=self.u_law,
            beta0=self.beta0,
            design_mode=self.design_mode,
        )
        fields.update(changes)
        return ModelSpec(**fields)

    def describe(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "beta0": self.beta0,
            "beta": list(self.beta),
            "x": self.x_law.literal,
            "v": law_literal(self.v_law),
            "u": law_literal(self.u_law),
            "e": self.e_law.literal,
            "design": self.design_mode,
        }

    def key(self) -> str:
        d = self.describe()
        return ";".join(f"{k}={d[k]}" for k in sorted(d))

    def q_matrix(self) -> np.ndarray:
        """Population Q, or the realized Q_n of an explicit fixed matrix."""
        if isinstance(self.x_law, Fixed):
            return linalg.centered_covariance(self.x_law.matrix)
        return law_covariance(self.x_law.law, self.p, "regressor")

    def v_matrix(self) -> np.ndarray:
        return law_covariance(self.v_law, self.p, "measurement error")


def spec_from_literals(n, beta, e, x, v=None, u=None, beta0=1.0, design="random") -> ModelSpec:
    return ModelSpec(
        n=int(n),
        beta=tuple(np.atleast_1d(beta)),
        e_law=parse_law(e),
        x_law=Random(parse_law(x)),
        v_law=parse_law(v),
        u_law=parse_law(u),
        beta0=float(beta0),
        design_mode=design,
    )


def _draw(law, rng, n: int, p: int) -> np.ndarray:
    if law is None:
        return np.zeros((n, p))
    if isinstance(law, MvNormal):
        return law.sample_n(rng, n)
    return law.sample_n(rng, n * p).reshape(n, p)


def frozen_design(spec: ModelSpec, seed: int) -> np.ndarray:
    """The design shared by all replications of a deterministic-mode spec."""
    if isinstance(spec.x_law, Fixed):
        return spec.x_law.matrix
    rng = substream(seed, "design", spec.x_law.literal, spec.p)
    return _draw(spec.x_law.law, rng, spec.n, spec.p)


def generate(spec: ModelSpec, rng: np.random.Generator, design: Optional[np.ndarray] = None) -> Sample:
    """One sample with its latent record.

    Draw order within ``rng``: X (unless fixed or supplied), V, u, e.
    """
    n, p = spec.n, spec.p
    if design is not None:
        X = np.asarray(design, dtype=float).reshape(n, p)
    elif isinstance(spec.x_law, Fixed):
        X = spec.x_law.matrix
    else:
        X = _draw(spec.x_law.law, rng, n, p)
    V = _draw(spec.v_law, rng, n, p)
    u = np.zeros(n) if spec.u_law is None else spec.u_law.sample_n(rng, n)
    e = spec.e_law.sample_n(rng, n)
    beta = np.asarray(spec.beta)
    ystar = spec.beta0 + X @ beta + e + u
    latent = Latent(X=X, V=V, u=u, e=e, beta0=spec.beta0, beta=beta)
    return Sample(X + V, ystar, latent)


# -- Monte Carlo ------------------------------------------------------------


@dataclass
class EstimatorStats:
    bias: np.ndarray
    variance: np.ndarray
    mc_se: np.ndarray
    replications: int
    failures: int
    ties: int = 0

    def as_dict(self) -> dict:
        return {
            "bias": [float(x) for x in self.bias],
            "variance": [float(x) for x in self.variance],
            "mc_se": [float(x) for x in self.mc_se],
            "replications": int(self.replications),
            "failures": int(self.failures),
            "ties": int(self.ties),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorStats":
        return cls(
            bias=np.asarray(d["bias"], dtype=float),
            variance=np.asarray(d["variance"], dtype=float),
            mc_se=np.asarray(d["mc_se"], dtype=float),
            replications=int(d["replications"]),
            failures=int(d["failures"]),
            ties=int(d.get("ties", 0)),
        )


@dataclass
class MonteCarloReport:
    """Empirical bias and variance per estimator, plus the theoretical column.

    ``theoretical`` is an AsymptoticSummary, or a string starting with
    ``"UnsupportedLaw"`` when a regressor or measurement-error law has no
    finite variance. ``wall_time`` is informational and never serialized.
    """

    scenario_id: str
    scenario: dict
    score: str
    construction: str
    seed: int
    reps: int
    estimators: dict
    theoretical: Union[AsymptoticSummary, str, None]
    labels: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        theo = self.theoretical
        if isinstance(theo, AsymptoticSummary):
            theo = theo.as_dict()
        return {
            "scenario_id": self.scenario_id,
            "scenario": self.scenario,
            "score": self.score,
            "construction": self.construction,
            "seed": int(self.seed),
            "reps": int(self.reps),
            "estimators": {k: v.as_dict() for k, v in self.estimators.items()},
            "theoretical": theo,
            "labels": self.labels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MonteCarloReport":
        theo = d.get("theoretical")
        if isinstance(theo, dict):
            theo = AsymptoticSummary.from_dict(theo)
        return cls(
            scenario_id=d["scenario_id"],
            scenario=d["scenario"],
            score=d["score"],
            construction=d["construction"],
            seed=int(d["seed"]),
            reps=int(d["reps"]),
            estimators={k: EstimatorStats.from_dict(v) for k, v in d["estimators"].items()},
            theoretical=theo,
            labels=d.get("labels", {}),
        )


def _replicate(job):
    """Run every estimator on replication indices ``lo..hi-1``."""
    spec, estimators, sf_name, construction, seed, scenario_id, design, lo, hi, opts = job
    sf = get_score(sf_name)
    scores = make_scores(sf, spec.n, construction)
    p = spec.p
    out = {name: np.full((hi - lo, p), np.nan) for name in estimators}
    ties = {name: 0 for name in estimators}
    for r in range(lo, hi):
        rng = substream(seed, scenario_id, r)
        sample = generate(spec, rng, design)
        for name in estimators:
            try:
                res = estimate(sample, name, sf, scores, opts)
            except RankMEError:
                continue
            out[name][r - lo] = res.beta_hat
            ties[name] += int(res.telemetry.ties_seen)
    return lo, out, ties


def _chunks(reps: int, jobs: int):
    size = max(1, math.ceil(reps / (4 * jobs)))
    return [(lo, min(reps, lo + size)) for lo in range(0, reps, size)]


def theoretical_for(spec: ModelSpec, sf) -> Union[AsymptoticSummary, str]:
    try:
        Q = spec.q_matrix()
        V = spec.v_matrix()
    except UnsupportedLaw as exc:
        return f"UnsupportedLaw: {exc}"
    return summarize(Q, V, spec.beta, spec.e_law, spec.u_law, sf)


@dataclass(frozen=True, eq=False)
class _Plan:
    spec: ModelSpec
    estimators: tuple
    sf_name: str
    construction: str
    seed: int
    reps: int
    scenario_id: str
    labels: dict
    jobs_args: list


def plan_experiment(
    spec: ModelSpec,
    estimators: Sequence[str] = ("r",),
    sf="wilcoxon",
    reps: int = 2000,
    seed: int = 15,
    scores: str = "approx",
    jobs: int = 1,
    scenario_id: Optional[str] = None,
    opts: Optional[ROptions] = None,
    labels: Optional[dict] = None,
) -> _Plan:
    """Validate inputs and split the replications into worker tasks."""
    if reps < 2:
        raise InvalidParameters(f"reps must be at least 2, got {reps}")
    estimators = tuple(estimators)
    for name in estimators:
        if name not in ESTIMATOR_NAMES:
            raise InvalidParameters(f"unknown estimator {name!r}")
    sf = get_score(sf)
    scenario_id = scenario_id or spec.key()
    design = frozen_design(spec, seed) if spec.design_mode == "deterministic" else None
    args = [
        (spec, estimators, sf.name, scores, seed, scenario_id, design, lo, hi, opts)
        for lo, hi in _chunks(reps, max(1, int(jobs)))
    ]
    return _Plan(spec, estimators, sf.name, scores, int(seed), int(reps), scenario_id, dict(labels or {}), args)


def summarize_experiment(plan: _Plan, results: list, wall_time: float = 0.0) -> MonteCarloReport:
    """Reduce worker results in replication order into a report."""
    results = sorted(results, key=lambda t: t[0])
    spec, reps = plan.spec, plan.reps
    beta = np.asarray(spec.beta)
    stats = {}
    for name in plan.estimators:
        draws = np.concatenate([res[1][name] for res in results], axis=0)
        ok = np.all(np.isfinite(draws), axis=1)
        failures = int(reps - ok.sum())
        if failures > MAX_FAILURE_FRACTION * reps:
            raise MonteCarloFailure(f"{name}: {failures} of {reps} replications failed in {plan.scenario_id}")
        good = draws[ok]
        m = good.shape[0]
        var = good.var(axis=0, ddof=1) if m > 1 else np.full(spec.p, np.nan)
        stats[name] = EstimatorStats(
            bias=good.mean(axis=0) - beta,
            variance=var,
            mc_se=np.sqrt(var / m),
            replications=m,
            failures=failures,
            ties=sum(res[2][name] for res in results),
        )
    return MonteCarloReport(
        scenario_id=plan.scenario_id,
        scenario=spec.describe(),
        score=plan.sf_name,
        construction=plan.construction,
        seed=plan.seed,
        reps=reps,
        estimators=stats,
        theoretical=theoretical_for(spec, plan.sf_name),
        labels=plan.labels,
        wall_time=wall_time,
    )


def execute_plans(plans: Sequence[_Plan], jobs: int = 1) -> list[MonteCarloReport]:
    """Run several experiments, sharing one worker pool across all of them."""
    t0 = time.perf_counter()
    flat = [(i, a) for i, plan in enumerate(plans) for a in plan.jobs_args]
    if jobs > 1 and len(flat) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_replicate, [a for _, a in flat], chunksize=1))
    else:
        outs = [_replicate(a) for _, a in flat]
    grouped = [[] for _ in plans]
    for (i, _), res in zip(flat, outs):
        grouped[i].append(res)
    elapsed = time.perf_counter() - t0
    return [summarize_experiment(p, g, elapsed) for p, g in zip(plans, grouped)]


def run_experiment(
    spec: ModelSpec,
    estimators: Sequence[str] = ("r",),
    sf="wilcoxon",
    reps: int = 2000,
    seed: int = 15,
    scores: str = "approx",
    jobs: int = 1,
    scenario_id: Optional[str] = None,
    opts: Optional[ROptions] = None,
    labels: Optional[dict] = None,
) -> MonteCarloReport:
    """Replicate ``spec`` ``reps`` times and summarize each estimator.

    Bias is mean(beta_hat) - beta; variance is the componentwise sample
    variance with divisor reps - 1 over successful replications. The
    output does not depend on ``jobs``.

    Raises
    ------
    MonteCarloFailure
        If more than 1% of replications fail for some estimator.
    """
    plan = plan_experiment(spec, estimators, sf, reps, seed, scores, jobs, scenario_id, opts, labels)
    return execute_plans([plan], jobs)[0]


def default_jobs() -> int:
    return max(1, min(8, os.cpu_count() or 1))
