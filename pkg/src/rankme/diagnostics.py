"""Simulation checks of asymptotic linearity and the rank-statistic representation.

Both checks report Monte Carlo means with standard errors along a ladder of
sample sizes. The limits involved hold in probability without a stated
rate, so the check is qualitative: the means should fall along the ladder.

Also re-exports the Fisher information and Hellinger quadratures and adds
the shift-mixture Hellinger ceiling n H^2(f, f * k_n) <= 2 I(f) E[U^2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .asymptotics import ErrorLaw, ShiftMixture, fisher_information, gamma_m, hellinger_sq
from .distributions import Distribution, substream
from .rankcore import rank_statistic_from_residuals
from .scores import get_score, make_scores, phi
from .simulation import ModelSpec, frozen_design, generate

LADDER = (100, 400, 1600)

__all__ = [
    "LADDER",
    "LinearityReport",
    "RepresentationReport",
    "check_linearity",
    "representation_gap",
    "representation_gap_sample",
    "fisher_information",
    "hellinger_sq",
    "hellinger_ceiling",
    "decreasing_within",
]


def _mean_se(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def decreasing_within(means: Sequence[float], ses: Sequence[float], k: float = 2.0) -> bool:
    """True when each step m[i+1] - m[i] is at most k combined standard errors."""
    for i in range(len(means) - 1):
        slack = k * math.hypot(ses[i], ses[i + 1])
        if means[i + 1] - means[i] > slack:
            return False
    return True


@dataclass
class LinearityReport:
    """Mean of ||S_n(b*, beta) - S_n(0,0) + gamma[(Q+V) b0* + V beta0]|| per (n, pair).

    ``lhs_norms[i][j]`` is for ``ns[i]`` and ``pairs[j]`` using population Q
    and V; ``realized_norms`` substitutes the per-sample Q_n and V_n.
    """

    ns: list
    b_grid: list
    lhs_norms: list
    lhs_se: list
    realized_norms: list
    realized_se: list
    gamma_used: float
    reps: int
    seed: int

    def as_dict(self) -> dict:
        return {
            "ns": list(self.ns),
            "b_grid": [[list(map(float, b)), list(map(float, c))] for b, c in self.b_grid],
            "lhs_norms": self.lhs_norms,
            "lhs_se": self.lhs_se,
            "realized_norms": self.realized_norms,
            "realized_se": self.realized_se,
            "gamma_used": self.gamma_used,
            "reps": self.reps,
            "seed": self.seed,
        }

    def column(self, j: int = 0, realized: bool = False):
        m = self.realized_norms if realized else self.lhs_norms
        s = self.realized_se if realized else self.lhs_se
        return [row[j] for row in m], [row[j] for row in s]

    def decreasing(self, j: int = 0, realized: bool = False) -> bool:
        return decreasing_within(*self.column(j, realized))


def check_linearity(
    spec: ModelSpec,
    sf="wilcoxon",
    pairs: Sequence = (((1.0,), (1.0,)),),
    reps: int = 200,
    seed: int = 15,
    ns: Sequence[int] = LADDER,
) -> LinearityReport:
    """Monte Carlo check of the asymptotic linearity of S_n under local slopes.

    For each n the true slope is beta_n = n^{-1/2} beta0 and S_n is evaluated
    at b = beta_n + n^{-1/2} b0*. S_n(0,0) ranks the response errors e + u
    against the observed regressors. ``spec.beta`` and ``spec.n`` are ignored.
    """
    sf = get_score(sf)
    p = spec.p
    gamma = gamma_m(spec.e_law, spec.u_law, sf)
    Q = spec.q_matrix()
    V = spec.v_matrix()
    grid = [(np.atleast_1d(np.asarray(b, float)), np.atleast_1d(np.asarray(c, float))) for b, c in pairs]
    for b, c in grid:
        if b.size != p or c.size != p:
            raise ValueError(f"pairs must hold {p}-vectors")
    norms, ses, rnorms, rses = [], [], [], []
    for n in ns:
        a = make_scores(sf, n, "approx").values
        pop = np.zeros((reps, len(grid)))
        real = np.zeros((reps, len(grid)))
        for j, (bstar, beta0) in enumerate(grid):
            local = spec.with_(n=n, beta=tuple(beta0 / math.sqrt(n)))
            design = frozen_design(local, seed) if local.design_mode == "deterministic" else None
            pop_shift = gamma * ((Q + V) @ bstar + V @ beta0)
            for r in range(reps):
                smp = generate(local, substream(seed, "linearity", n, j, r), design)
                lt = smp.latent
                Wc = smp.Wc
                s00 = rank_statistic_from_residuals(Wc, lt.e + lt.u, a)
                b = (beta0 + bstar) / math.sqrt(n)
                sb = rank_statistic_from_residuals(Wc, smp.residuals(b), a)
                diff = sb - s00
                pop[r, j] = np.linalg.norm(diff + pop_shift)
                Qn = linalg.centered_covariance(lt.X)
                Vn = linalg.centered_covariance(lt.V)
                real[r, j] = np.linalg.norm(diff + gamma * ((Qn + Vn) @ bstar + Vn @ beta0))
        row = [_mean_se(pop[:, j]) for j in range(len(grid))]
        rrow = [_mean_se(real[:, j]) for j in range(len(grid))]
        norms.append([m for m, _ in row])
        ses.append([s for _, s in row])
        rnorms.append([m for m, _ in rrow])
        rses.append([s for _, s in rrow])
    return LinearityReport(list(ns), grid, norms, ses, rnorms, rses, float(gamma), reps, seed)


@dataclass
class RepresentationReport:
    ns: list
    gaps: list
    se: list
    reps: int
    seed: int
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"ns": list(self.ns), "gaps": self.gaps, "se": self.se, "reps": self.reps, "seed": self.seed}

    def decreasing(self) -> bool:
        return decreasing_within(self.gaps, self.se)


def representation_gap_sample(W, resid, cdf, sf, scores=None) -> float:
    """||S_n(0,0) - Z_n|| for one sample.

    S_n(0,0) uses the scores at the ranks of ``resid``; Z_n replaces them by
    phi(cdf(resid)) with the exact error CDF.
    """
    sf = get_score(sf)
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W.reshape(-1, 1)
    resid = np.asarray(resid, dtype=float)
    n = resid.size
    a = make_scores(sf, n, "approx").values if scores is None else np.asarray(getattr(scores, "values", scores), float)
    Wc = W - W.mean(axis=0)
    s = rank_statistic_from_residuals(Wc, resid, a)
    u = np.clip(np.asarray(cdf(resid), dtype=float), 1e-300, 1 - 1e-16)
    z = Wc.T @ np.asarray(phi(sf, u), dtype=float) / math.sqrt(n)
    return float(np.linalg.norm(s - z))


def representation_gap(
    spec: ModelSpec,
    sf="wilcoxon",
    reps: int = 200,
    seed: int = 15,
    ns: Sequence[int] = LADDER,
) -> RepresentationReport:
    """Monte Carlo mean of ||S_n(0,0) - Z_n|| along the n ladder.

    The error CDF is that of e + u (just F when there is no response error).
    """
    sf = get_score(sf)
    law = ErrorLaw(spec.e_law, spec.u_law) if spec.u_law is not None else spec.e_law
    gaps, ses = [], []
    for n in ns:
        local = spec.with_(n=n)
        design = frozen_design(local, seed) if local.design_mode == "deterministic" else None
        a = make_scores(sf, n, "approx").values
        vals = np.empty(reps)
        for r in range(reps):
            smp = generate(local, substream(seed, "representation", n, r), design)
            lt = smp.latent
            vals[r] = representation_gap_sample(smp.W, lt.e + lt.u, law.cdf, sf, a)
        m, s = _mean_se(vals)
        gaps.append(m)
        ses.append(s)
    return RepresentationReport(list(ns), gaps, ses, reps, seed)


def hellinger_ceiling(f: Distribution, k: Distribution, ns: Sequence[int] = (100, 1000, 10000)) -> list:
    """Rows (n, n H^2(f, law of e + n^{-1/2} U), 2 I(f) E[U^2]) with e ~ f, U ~ k."""
    info = fisher_information(f)
    second = k.variance() + k.mean() ** 2
    bound = 2.0 * info * second
    rows = []
    for n in ns:
        mix = ShiftMixture(f, k, 1.0 / math.sqrt(n))
        rows.append((int(n), float(n * hellinger_sq(f, mix)), float(bound)))
    return rows
