"""R-, least-squares and least-absolute-deviation slope estimators.

The R-estimator is any minimizer of Jaeckel's dispersion D_n(b). The
objective is convex but piecewise linear, so minimization is derivative
free: a golden-section search on a data-scaled bracket when p = 1, and a
Nelder-Mead simplex started at the L1 fit (then once more from the LS fit)
when p >= 2. The intercept, a nuisance for the rank statistics, is reported
as the median of the slope residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import linalg
from ._backend import kernels
from .errors import DegenerateDesign, OptimizerDivergence, SingularMatrix
from .rankcore import Sample, linear_rank_statistic_ties
from .scores import get_score, make_scores

MAX_EVALS = 10_000


@dataclass
class Telemetry:
    iterations: int = 0
    final_objective: float = math.nan
    converged: bool = True
    ties_seen: bool = False
    s_norm: float = math.nan


@dataclass
class EstimateResult:
    beta_hat: np.ndarray
    intercept_hat: Optional[float]
    estimator: str
    telemetry: Telemetry = field(default_factory=Telemetry)

    def as_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "beta_hat": [float(x) for x in self.beta_hat],
            "intercept_hat": None if self.intercept_hat is None else float(self.intercept_hat),
            "telemetry": {
                "iterations": int(self.telemetry.iterations),
                "final_objective": float(self.telemetry.final_objective),
                "converged": bool(self.telemetry.converged),
                "ties_seen": bool(self.telemetry.ties_seen),
                "s_norm": float(self.telemetry.s_norm),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateResult":
        return cls(
            beta_hat=np.asarray(d["beta_hat"], dtype=float),
            intercept_hat=d.get("intercept_hat"),
            estimator=d["estimator"],
            telemetry=Telemetry(**d.get("telemetry", {})),
        )


@dataclass
class ROptions:
    """Optimizer settings for :func:`r_estimate`."""

    construction: str = "approx"
    xtol: float = 1e-8
    ftol: float = 1e-12
    line_tol: float = 1e-10
    max_evals: int = MAX_EVALS
    bracket_halfwidth: float = 10.0


def _check_design(sample: Sample) -> None:
    spread = np.max(np.abs(sample.Wc), axis=0)
    scale = np.max(np.abs(sample.W), axis=0) + 1.0
    bad = np.flatnonzero(spread <= 1e-14 * scale)
    if bad.size:
        raise DegenerateDesign(f"regressor column(s) {bad.tolist()} are constant")


def _mad(x: np.ndarray) -> float:
    return float(np.median(np.abs(x - np.median(x))))


def _slope_scales(sample: Sample) -> np.ndarray:
    """Robust response-to-regressor scale ratio per column."""
    sy = _mad(sample.ystar) or float(np.std(sample.ystar)) or 1.0
    out = []
    for j in range(sample.p):
        col = sample.W[:, j]
        sw = _mad(col) or float(np.std(col)) or 1.0
        out.append(sy / sw)
    return np.asarray(out)


# -- least squares ---------------------------------------------------------


def ls_estimate(sample: Sample) -> EstimateResult:
    """Ordinary least squares with intercept, via the centered normal equations."""
    _check_design(sample)
    Wc = sample.Wc
    yc = sample.ystar - sample.ystar.mean()
    norms = np.sqrt(np.sum(Wc * Wc, axis=0))
    Z = Wc / norms
    try:
        coef = linalg.solve(Z.T @ Z, Z.T @ yc) / norms
    except SingularMatrix as exc:
        raise DegenerateDesign(f"centered design is rank deficient: {exc}") from exc
    intercept = float(sample.ystar.mean() - sample.W.mean(axis=0) @ coef)
    resid = sample.ystar - intercept - sample.W @ coef
    tel = Telemetry(iterations=1, final_objective=float(resid @ resid))
    return EstimateResult(coef, intercept, "LS", tel)


# -- least absolute deviations ---------------------------------------------


def l1_objective(sample: Sample, intercept: float, slope) -> float:
    return float(np.sum(np.abs(sample.ystar - intercept - sample.W @ np.atleast_1d(slope))))


def l1_estimate(sample: Sample, opts=None) -> EstimateResult:
    """Least absolute deviations fit with intercept.

    Solved as the dual linear program max y'd subject to X'd = 0,
    -1 <= d <= 1, whose equality multipliers are the coefficients. The
    simplex solver returns a vertex, i.e. a fit through p + 1 data points.
    """
    _check_design(sample)
    n, p = sample.n, sample.p
    X = np.column_stack([np.ones(n), sample.W])
    y = sample.ystar
    res = linprog(-y, A_eq=X.T, b_eq=np.zeros(p + 1), bounds=(-1.0, 1.0), method="highs-ds")
    coef = None
    if res.status == 0:
        coef = -np.asarray(res.eqlin.marginals, dtype=float)
        obj = float(np.sum(np.abs(y - X @ coef)))
        if abs(obj + res.fun) > 1e-7 * (1.0 + abs(obj)):
            coef = None
    if coef is None:
        coef, obj, nit = _l1_primal(X, y)
    else:
        nit = int(res.nit)
    tel = Telemetry(iterations=nit, final_objective=obj)
    return EstimateResult(coef[1:].copy(), float(coef[0]), "L1", tel)


def _l1_primal(X: np.ndarray, y: np.ndarray):
    n, k = X.shape
    c = np.concatenate([np.zeros(k), np.ones(2 * n)])
    eye = sparse.identity(n, format="csc")
    A = sparse.hstack([sparse.csc_matrix(X), eye, -eye], format="csc")
    bounds = [(None, None)] * k + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A, b_eq=y, bounds=bounds, method="highs-ds")
    if res.status != 0:
        raise OptimizerDivergence(f"L1 linear program failed: {res.message}")
    coef = np.asarray(res.x[:k])
    return coef, float(np.sum(np.abs(y - X @ coef))), int(res.nit)


# -- R-estimation -----------------------------------------------------------


def r_intercept(sample: Sample, beta_hat) -> float:
    """Median of Y*_i - w_i'beta_hat (mean of the two middle values for even n)."""
    return float(np.median(sample.residuals(beta_hat)))


def r_estimate(sample: Sample, sf=None, opts: Optional[ROptions] = None, scores=None) -> EstimateResult:
    """Minimize Jaeckel's dispersion over the slope vector.

    Parameters
    ----------
    sample : Sample
    sf : ScoreFunction or str, optional
        Score generator; Wilcoxon by default.
    opts : ROptions, optional
    scores : ScoreVector, optional
        Precomputed scores of length n; built from ``sf`` when omitted.

    Raises
    ------
    DegenerateDesign
        A centered regressor column is identically zero.
    OptimizerDivergence
        The evaluation cap was hit before convergence.
    """
    opts = opts or ROptions()
    sf = get_score(sf or "wilcoxon")
    _check_design(sample)
    if scores is None:
        scores = make_scores(sf, sample.n, opts.construction)
    a = np.ascontiguousarray(scores.values, dtype=float)
    if sample.p == 1:
        center, nev0 = l1_line_slope(sample, opts)
        beta, dval, nev = _line_minimize(sample, a, center, opts)
        nev += nev0
    else:
        start = l1_estimate(sample).beta_hat
        beta, dval, nev = _simplex_minimize(sample, a, start, opts)
        ls_start = ls_estimate(sample).beta_hat
        beta2, dval2, nev2 = _simplex_minimize(sample, a, ls_start, opts, budget=opts.max_evals - nev)
        nev += nev2
        if dval2 < dval:
            beta, dval = beta2, dval2
        beta, dval, nev3 = _polish(sample, a, beta, dval, opts, opts.max_evals - nev)
        nev += nev3
    s, ties = linear_rank_statistic_ties(sample, beta, scores)
    tel = Telemetry(
        iterations=nev,
        final_objective=dval,
        converged=True,
        ties_seen=ties,
        s_norm=float(np.sqrt(s @ s)),
    )
    return EstimateResult(beta, r_intercept(sample, beta), f"R({sf.name})", tel)


def l1_line_slope(sample: Sample, opts: Optional[ROptions] = None):
    """L1 slope for p = 1 by golden section on the profile b -> min_c sum|y - c - b w|.

    Agrees with :func:`l1_estimate` to the line tolerance; used as the
    centre of the R-estimator search bracket. Returns (slope, evaluations).
    """
    opts = opts or ROptions()
    center = float(ls_estimate(sample).beta_hat[0])
    b, _, nev = _bracketed(kernels.lad_line, sample, (), center, opts)
    return float(b), nev


def _line_minimize(sample: Sample, a: np.ndarray, center: float, opts: ROptions):
    b, dval, nev = _bracketed(kernels.line_search, sample, (a,), center, opts)
    return np.array([b]), float(dval), nev


def _bracketed(search, sample: Sample, extra: tuple, center: float, opts: ROptions):
    """Run a 1-D search on centre +- 10 sigma, widening when it ends on an edge."""
    w = np.ascontiguousarray(sample.W[:, 0])
    y = sample.ystar
    half = opts.bracket_halfwidth * float(_slope_scales(sample)[0])
    nev_total = 0
    for _attempt in range(4):
        lo, hi = center - half, center + half
        tol = opts.line_tol * (1.0 + abs(center) + half)
        b, dval, nev = search(w, y, *extra, lo, hi, tol, opts.max_evals - nev_total)
        nev_total += nev
        if nev_total >= opts.max_evals:
            raise OptimizerDivergence(f"line search used {nev_total} evaluations")
        edge = 4.0 * tol
        if lo + edge < b < hi - edge:
            return b, dval, nev_total
        # minimum sits on the bracket edge; recentre and widen
        center, half = b, 4.0 * half
    raise OptimizerDivergence("minimum kept landing on the search bracket boundary")


def _simplex_minimize(sample: Sample, a: np.ndarray, x0, opts: ROptions, budget: Optional[int] = None):
    W, y = sample.W, sample.ystar
    budget = opts.max_evals if budget is None else budget
    if budget <= 0:
        raise OptimizerDivergence("no evaluations left for the simplex restart")

    def f(b):
        return kernels.dispersion_at(W, y, b, a)

    scales = _slope_scales(sample)
    x = np.asarray(x0, dtype=float).copy()
    step = np.maximum(0.1 * np.abs(x), 0.1 * scales)
    step = np.maximum(step, 1e-3)
    fx = f(x)
    nev = 1
    # restart from the best vertex until a fresh simplex no longer improves it
    for _round in range(8):
        x_new, f_new, used = nelder_mead(f, x, step, opts.xtol, opts.ftol, budget - nev)
        nev += used
        improved = f_new < fx - opts.ftol * (1.0 + abs(fx))
        if f_new <= fx:
            x, fx = x_new, f_new
        if not improved:
            break
        step = np.maximum(0.01 * scales, 1e-6 * (1.0 + np.abs(x)))
    return x, float(fx), nev


def _direction_search(sample: Sample, a: np.ndarray, x: np.ndarray, d: np.ndarray, opts: ROptions, budget: int):
    """Exact 1-D minimization of t -> D_n(x + t d), bracket [-1, 1] widened as needed."""
    wd = np.ascontiguousarray(sample.W @ d)
    y0 = np.ascontiguousarray(sample.ystar - sample.W @ x)
    half, center, used = 1.0, 0.0, 0
    for _attempt in range(6):
        tol = opts.line_tol * (1.0 + abs(center) + half)
        t, ft, nev = kernels.line_search(wd, y0, a, center - half, center + half, tol, max(budget - used, 3))
        used += nev
        if abs(t - center) < half - 4.0 * tol:
            return t, ft, used
        center, half = t, 4.0 * half
    return t, ft, used


def _powell_polish(sample: Sample, a: np.ndarray, x, fx: float, opts: ROptions, budget: int):
    """Refine a simplex result with cycles of exact line searches.

    Nelder-Mead can stall on a kink ridge of the piecewise-linear objective.
    Line searches along the coordinate axes, plus each cycle's net
    displacement (Powell's direction update), follow such ridges to the
    vertex. Returns (x, D(x), evaluations).
    """
    p = sample.p
    scales = _slope_scales(sample)
    dirs = [np.eye(p)[j] * scales[j] for j in range(p)]
    x = np.asarray(x, dtype=float).copy()
    nev = 0
    for _cycle in range(50):
        x0, f0 = x.copy(), fx
        for d in dirs:
            t, ft, used = _direction_search(sample, a, x, d, opts, budget - nev)
            nev += used
            if ft < fx:
                x, fx = x + t * d, ft
        disp = x - x0
        if f0 - fx <= opts.ftol * (1.0 + abs(fx)) or not np.any(disp):
            break
        t, ft, used = _direction_search(sample, a, x, disp, opts, budget - nev)
        nev += used
        if ft < fx:
            x, fx = x + t * disp, ft
        dirs = dirs[1:] + [disp]
        if nev >= budget:
            raise OptimizerDivergence("line-search polish exhausted the evaluation budget")
    return x, float(fx), nev


def _ridge_directions(sample: Sample, x: np.ndarray, tol: float) -> list:
    """Directions that keep all but at most one near-tie among residuals.

    Kinks of the dispersion sit where two residuals tie. Moving inside the
    null space of the active tie constraints follows a ridge; dropping one
    constraint at a time lets the search leave a non-optimal vertex.
    """
    p = sample.p
    r = sample.ystar - sample.W @ x
    order = np.argsort(r, kind="stable")
    gaps = np.diff(r[order])
    idx = np.flatnonzero(gaps <= tol)
    if idx.size == 0 or idx.size > 2 * p + 2:
        return []
    G = sample.W[order[idx + 1]] - sample.W[order[idx]]
    subsets = [np.arange(len(G))]
    if len(G) > 1:
        subsets += [np.delete(np.arange(len(G)), k) for k in range(len(G))]
    out = []
    for rows in subsets:
        _, sv, vt = np.linalg.svd(G[rows], full_matrices=True)
        rank = int(np.sum(sv > 1e-10 * (sv[0] if sv.size else 1.0)))
        out.extend(vt[rank:])
    return out


def _polish(sample: Sample, a: np.ndarray, x, fx: float, opts: ROptions, budget: int):
    """Alternate Powell cycles and ridge line searches until neither helps."""
    scale = _mad(sample.ystar) or 1.0
    x, fx, nev = _powell_polish(sample, a, x, fx, opts, budget)
    for _round in range(40):
        improved = False
        for d in _ridge_directions(sample, x, 1e-7 * scale):
            d = d * _slope_scales(sample)[np.argmax(np.abs(d))] / np.max(np.abs(d))
            t, ft, used = _direction_search(sample, a, x, d, opts, budget - nev)
            nev += used
            if ft < fx - opts.ftol * (1.0 + abs(fx)):
                x, fx, improved = x + t * d, ft, True
                break
        if not improved:
            break
        x, fx, used = _powell_polish(sample, a, x, fx, opts, budget - nev)
        nev += used
    return x, fx, nev


def nelder_mead(f, x0, step, xtol: float, ftol: float, max_evals: int):
    """Nelder-Mead simplex descent on R^p.

    Converges when the simplex diameter drops below xtol * (1 + |x_best|) or
    the spread of vertex values below ftol * (1 + |f_best|). Returns
    (x_best, f_best, evaluations); raises OptimizerDivergence when the
    evaluation budget runs out first.
    """
    p = len(x0)
    pts = np.empty((p + 1, p))
    pts[0] = x0
    for j in range(p):
        pts[j + 1] = x0
        pts[j + 1, j] += step[j]
    vals = np.array([f(v) for v in pts])
    nev = p + 1
    while True:
        order = np.argsort(vals, kind="stable")
        pts, vals = pts[order], vals[order]
        best = pts[0]
        diam = float(np.max(np.sqrt(np.sum((pts[1:] - best) ** 2, axis=1))))
        spread = vals[-1] - vals[0]
        if diam < xtol * (1.0 + float(np.sqrt(best @ best))) or spread <= ftol * (1.0 + abs(vals[0])):
            return best.copy(), float(vals[0]), nev
        if nev >= max_evals:
            raise OptimizerDivergence(f"simplex hit the cap of {max_evals} evaluations")
        centroid = pts[:-1].mean(axis=0)
        worst = pts[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        nev += 1
        if fr < vals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            nev += 1
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            nev += 1
            if fc < min(fr, vals[-1]):
                pts[-1], vals[-1] = xc, fc
            else:
                for k in range(1, p + 1):
                    pts[k] = best + 0.5 * (pts[k] - best)
                    vals[k] = f(pts[k])
                nev += p


ESTIMATOR_NAMES = ("r", "ls", "l1")


def estimate(sample: Sample, name: str, sf=None, scores=None, opts: Optional[ROptions] = None) -> EstimateResult:
    """Dispatch by estimator tag: ``r``, ``ls`` or ``l1``."""
    key = name.lower()
    if key == "r":
        return r_estimate(sample, sf, opts, scores=scores)
    if key == "ls":
        return ls_estimate(sample)
    if key == "l1":
        return l1_estimate(sample)
    raise ValueError(f"unknown estimator {name!r}; expected one of {ESTIMATOR_NAMES}")
