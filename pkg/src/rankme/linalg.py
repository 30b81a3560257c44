"""Small dense matrix kernel.

Dimensions here are tiny (p <= 10), so plain Gaussian elimination and a
Cholesky-type factorization are written out directly. Matrices are 2-D
float ``numpy`` arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import InsufficientData, NotSymmetric, SingularMatrix

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-10


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"not a matrix: shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def identity(p: int) -> np.ndarray:
    return np.eye(p)


def invert(m) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination with partial pivoting.

    Raises
    ------
    SingularMatrix
        If a pivot magnitude falls below ``PIVOT_TOL``.
    """
    a = as_matrix(m)
    p, q = a.shape
    if p != q:
        raise ValueError(f"cannot invert a {p}x{q} matrix")
    aug = np.hstack([a, np.eye(p)])
    for col in range(p):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < PIVOT_TOL:
            raise SingularMatrix(f"pivot {aug[piv, col]:.3e} in column {col}")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        for row in range(p):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, p:]


def solve(m, rhs) -> np.ndarray:
    return invert(m) @ np.asarray(rhs, dtype=float)


def check_symmetric(m, tol: float = SYMMETRY_TOL) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"non-square {a.shape}")
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol:
        raise NotSymmetric(f"asymmetry {asym:.3e} exceeds {tol:.1e}")
    return a


def cholesky(m) -> np.ndarray:
    """Lower-triangular L with L L^T = m.

    Raises SingularMatrix when a pivot is not above ``PIVOT_TOL``.
    """
    a = check_symmetric(m)
    p = a.shape[0]
    low = np.zeros_like(a)
    for j in range(p):
        d = a[j, j] - np.dot(low[j, :j], low[j, :j])
        if d <= PIVOT_TOL:
            raise SingularMatrix(f"non-positive pivot {d:.3e} at {j}")
        low[j, j] = np.sqrt(d)
        for i in range(j + 1, p):
            low[i, j] = (a[i, j] - np.dot(low[i, :j], low[j, :j])) / low[j, j]
    return low


def is_positive_definite(m) -> bool:
    try:
        cholesky(m)
    except SingularMatrix:
        return False
    return True


def min_pivot(m) -> float:
    """Smallest pivot of an unpivoted LDL^T sweep (diagnostic for PSD checks)."""
    a = check_symmetric(m).copy()
    p = a.shape[0]
    worst = np.inf
    for j in range(p):
        d = a[j, j]
        worst = min(worst, d)
        if d > PIVOT_TOL:
            col = a[j + 1 :, j] / d
            a[j + 1 :, j + 1 :] -= np.outer(col, a[j, j + 1 :])
    return float(worst)


def centered_covariance(rows) -> np.ndarray:
    """n^{-1} sum (r_i - rbar)(r_i - rbar)^T, divisor n."""
    r = np.asarray(rows, dtype=float)
    if r.ndim == 1:
        r = r.reshape(-1, 1)
    n = r.shape[0]
    if n < 2:
        raise InsufficientData(f"need at least 2 rows, got {n}")
    c = r - r.mean(axis=0)
    out = c.T @ c / n
    return (out + out.T) / 2.0
