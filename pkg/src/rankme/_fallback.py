"""Pure numpy implementation of the rank kernels.

Mirrors the API of the compiled ``_kernels`` module; ``_backend`` picks one
at import time.
"""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def midranks(resid):
    """Ranks 1..n with ties replaced by the average rank of their block."""
    r = np.asarray(resid, dtype=float)
    order = np.argsort(r, kind="stable")
    s = r[order]
    n = s.size
    ranks = np.empty(n)
    start = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    ties = start.size < n
    if not ties:
        ranks[order] = np.arange(1, n + 1, dtype=float)
        return ranks, False
    stop = np.r_[start[1:], n]
    block_rank = (start + stop + 1) / 2.0
    ranks[order] = np.repeat(block_rank, stop - start)
    return ranks, True


def score_at_ranks(resid, scores):
    """Score attached to each observation; tied blocks share their mean score."""
    r = np.asarray(resid, dtype=float)
    a = np.asarray(scores, dtype=float)
    order = np.argsort(r, kind="stable")
    s = r[order]
    n = s.size
    out = np.empty(n)
    start = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    if start.size == n:
        out[order] = a
        return out, False
    stop = np.r_[start[1:], n]
    block_mean = np.add.reduceat(a, start) / (stop - start)
    out[order] = np.repeat(block_mean, stop - start)
    return out, True


def dispersion(resid, scores):
    """Jaeckel dispersion sum_i r_(i) a_n(i); tie handling cannot change it."""
    return float(np.dot(np.sort(np.asarray(resid, dtype=float)), scores))


def dispersion_at(W, y, b, scores):
    return float(np.dot(np.sort(y - W @ b), scores))


def rank_statistic(Wc, resid, scores):
    a, ties = score_at_ranks(resid, scores)
    return Wc.T @ a / math.sqrt(a.size), ties


def line_search(w, y, scores, lo, hi, tol, max_eval):
    """Golden-section minimization of b -> D(y - b w) on [lo, hi].

    Returns (b, D(b), evaluations). Stops when the bracket is shorter than
    ``tol`` or after ``max_eval`` evaluations.
    """
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    scores = np.asarray(scores, dtype=float)

    def f(b):
        return float(np.dot(np.sort(y - b * w), scores))

    return _golden(f, lo, hi, tol, max_eval)


def lad_line(w, y, lo, hi, tol, max_eval):
    """Golden-section minimization of b -> min_c sum |y - c - b w| on [lo, hi]."""
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    k = (w.size - 1) // 2

    def f(b):
        r = y - b * w
        med = np.partition(r, k)[k]
        return float(np.sum(np.abs(r - med)))

    return _golden(f, lo, hi, tol, max_eval)


def _golden(f, lo, hi, tol, max_eval):
    a, c = float(lo), float(hi)
    x1 = c - INV_PHI * (c - a)
    x2 = a + INV_PHI * (c - a)
    f1, f2 = f(x1), f(x2)
    nev = 2
    while c - a > tol and nev < max_eval:
        if f1 <= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - INV_PHI * (c - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (c - a)
            f2 = f(x2)
        nev += 1
    mid = 0.5 * (a + c)
    fm = f(mid)
    nev += 1
    best = min((fm, mid), (f1, x1), (f2, x2))
    return best[1], best[0], nev
