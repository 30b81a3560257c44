# distutils: language = c++
"""Compiled rank kernels; same API as ``rankme._fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libcpp.algorithm cimport nth_element, sort
from libcpp.pair cimport pair
from libcpp.vector cimport vector

cnp.import_array()

cdef double INV_PHI = 0.6180339887498949
# above this size numpy's vectorized sort beats std::sort despite the call overhead
cdef Py_ssize_t SIMD_SORT_MIN = 256


cdef double _sorted_dot(double* r, const double* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    sort(r, r + n)
    for i in range(n):
        acc += r[i] * a[i]
    return acc


cdef void _argsort(const double[::1] r, vector[pair[double, Py_ssize_t]]& buf) noexcept nogil:
    cdef Py_ssize_t i, n = r.shape[0]
    buf.resize(n)
    for i in range(n):
        buf[i].first = r[i]
        buf[i].second = i
    sort(buf.begin(), buf.end())


def midranks(const double[::1] resid):
    cdef Py_ssize_t n = resid.shape[0], i, j, k
    cdef vector[pair[double, Py_ssize_t]] buf
    out = np.empty(n)
    cdef double[::1] ranks = out
    cdef bint ties = False
    cdef double rk
    _argsort(resid, buf)
    i = 0
    while i < n:
        j = i + 1
        while j < n and buf[j].first == buf[i].first:
            j += 1
        if j - i > 1:
            ties = True
        rk = (i + j + 1) / 2.0
        for k in range(i, j):
            ranks[buf[k].second] = rk
        i = j
    return out, bool(ties)


def score_at_ranks(const double[::1] resid, const double[::1] scores):
    cdef Py_ssize_t n = resid.shape[0], i, j, k
    cdef vector[pair[double, Py_ssize_t]] buf
    out = np.empty(n)
    cdef double[::1] a = out
    cdef bint ties = False
    cdef double m
    _argsort(resid, buf)
    i = 0
    while i < n:
        j = i + 1
        while j < n and buf[j].first == buf[i].first:
            j += 1
        if j - i == 1:
            a[buf[i].second] = scores[i]
        else:
            ties = True
            m = 0.0
            for k in range(i, j):
                m += scores[k]
            m /= (j - i)
            for k in range(i, j):
                a[buf[k].second] = m
        i = j
    return out, bool(ties)


cdef double _dot(const double* r, const double* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += r[i] * a[i]
    return acc


def dispersion(const double[::1] resid, const double[::1] scores):
    cdef Py_ssize_t n = resid.shape[0]
    cdef vector[double] r
    cdef double[::1] srt
    if n >= SIMD_SORT_MIN:
        srt = np.sort(np.asarray(resid))
        return _dot(&srt[0], &scores[0], n)
    r.assign(&resid[0], &resid[0] + n)
    return _sorted_dot(r.data(), &scores[0], n)


cdef void _residuals(const double[:, ::1] W, const double[::1] y, const double[::1] b, double* r) noexcept nogil:
    cdef Py_ssize_t n = W.shape[0], p = W.shape[1], i, j
    cdef double acc
    for i in range(n):
        acc = y[i]
        for j in range(p):
            acc -= W[i, j] * b[j]
        r[i] = acc


def dispersion_at(const double[:, ::1] W, const double[::1] y, const double[::1] b,
                  const double[::1] scores):
    cdef Py_ssize_t n = W.shape[0]
    cdef vector[double] r
    cdef double[::1] buf
    cdef double acc
    if n >= SIMD_SORT_MIN:
        arr = np.empty(n)
        buf = arr
        _residuals(W, y, b, &buf[0])
        arr.sort()
        return _dot(&buf[0], &scores[0], n)
    r.resize(n)
    with nogil:
        _residuals(W, y, b, r.data())
        acc = _sorted_dot(r.data(), &scores[0], n)
    return acc


def rank_statistic(const double[:, ::1] Wc, const double[::1] resid, const double[::1] scores):
    a, ties = score_at_ranks(resid, scores)
    return np.asarray(Wc).T @ a / sqrt(<double>resid.shape[0]), ties


cdef double _tracked_value(const double[::1] w, const double[::1] y, const double[::1] s,
                           double b, double* vals, Py_ssize_t* perm,
                           vector[pair[double, Py_ssize_t]]& buf) noexcept nogil:
    """D(y - b w), sorting residuals in the order left by the previous call.

    Nearby slopes give nearly sorted residuals, so an insertion sort is tried
    first; it gives up after 4n element moves and a full sort is used instead.
    """
    cdef Py_ssize_t i, j, n = w.shape[0], moves = 0, cap = 4 * n
    cdef Py_ssize_t pk
    cdef double v, acc = 0.0
    cdef bint done = True
    for i in range(n):
        pk = perm[i]
        vals[i] = y[pk] - b * w[pk]
    for i in range(1, n):
        v = vals[i]
        pk = perm[i]
        j = i - 1
        while j >= 0 and vals[j] > v:
            vals[j + 1] = vals[j]
            perm[j + 1] = perm[j]
            j -= 1
            moves += 1
        vals[j + 1] = v
        perm[j + 1] = pk
        if moves > cap:
            done = False
            break
    if not done:
        _full_sort(w, y, b, vals, perm, buf)
    for i in range(n):
        acc += vals[i] * s[i]
    return acc


cdef void _full_sort(const double[::1] w, const double[::1] y, double b, double* vals,
                     Py_ssize_t* perm, vector[pair[double, Py_ssize_t]]& buf) noexcept nogil:
    cdef Py_ssize_t i, n = w.shape[0]
    buf.resize(n)
    for i in range(n):
        buf[i].first = y[i] - b * w[i]
        buf[i].second = i
    sort(buf.begin(), buf.end())
    for i in range(n):
        vals[i] = buf[i].first
        perm[i] = buf[i].second


cdef class _LineObjective:
    """Residual dispersion along a line, with two sorting regimes.

    While the search bracket is wide, successive residual vectors share little
    order, so each call sorts values from scratch (numpy's vectorized sort for
    larger n). Once a step moves every residual by only a few average gaps, the
    previous permutation is kept and repaired by insertion sort.
    """

    cdef const double[::1] w
    cdef const double[::1] y
    cdef const double[::1] s
    cdef Py_ssize_t n
    cdef bint tracking
    cdef double wrange
    cdef double rrange
    cdef object work_arr
    cdef double[::1] work
    cdef vector[Py_ssize_t] perm
    cdef vector[pair[double, Py_ssize_t]] buf

    def __cinit__(self, const double[::1] w, const double[::1] y, const double[::1] s):
        cdef Py_ssize_t i
        cdef double lo, hi
        self.w = w
        self.y = y
        self.s = s
        self.n = w.shape[0]
        self.tracking = False
        lo = w[0]
        hi = w[0]
        for i in range(self.n):
            if w[i] < lo:
                lo = w[i]
            if w[i] > hi:
                hi = w[i]
        self.wrange = hi - lo
        self.rrange = 0.0
        self.work_arr = np.empty(self.n)
        self.work = self.work_arr
        self.perm.resize(self.n)

    cdef double value(self, double b, double width):
        cdef Py_ssize_t i, n = self.n
        cdef double acc = 0.0
        cdef double* vals = &self.work[0]
        if not self.tracking and self.rrange > 0.0 and width * self.wrange * n <= 4.0 * self.rrange:
            _full_sort(self.w, self.y, b, vals, self.perm.data(), self.buf)
            self.tracking = True
            for i in range(n):
                acc += vals[i] * self.s[i]
            return acc
        if self.tracking:
            return _tracked_value(self.w, self.y, self.s, b, vals, self.perm.data(), self.buf)
        for i in range(n):
            vals[i] = self.y[i] - b * self.w[i]
        if n >= 128:
            self.work_arr.sort()
        else:
            sort(vals, vals + n)
        self.rrange = vals[n - 1] - vals[0]
        for i in range(n):
            acc += vals[i] * self.s[i]
        return acc


def line_search(const double[::1] w, const double[::1] y, const double[::1] scores,
                double lo, double hi, double tol, long max_eval):
    cdef _LineObjective obj = _LineObjective(w, y, scores)
    cdef double a = lo, c = hi, x1, x2, f1, f2, mid, fm, bx, bf
    cdef long nev
    x1 = c - INV_PHI * (c - a)
    x2 = a + INV_PHI * (c - a)
    f1 = obj.value(x1, c - a)
    f2 = obj.value(x2, c - a)
    nev = 2
    while c - a > tol and nev < max_eval:
        if f1 <= f2:
            c = x2
            x2 = x1
            f2 = f1
            x1 = c - INV_PHI * (c - a)
            f1 = obj.value(x1, c - a)
        else:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + INV_PHI * (c - a)
            f2 = obj.value(x2, c - a)
        nev += 1
    mid = 0.5 * (a + c)
    fm = obj.value(mid, c - a)
    nev += 1
    bx, bf = mid, fm
    if f1 < bf or (f1 == bf and x1 < bx):
        bx, bf = x1, f1
    if f2 < bf or (f2 == bf and x2 < bx):
        bx, bf = x2, f2
    return bx, bf, nev


cdef double _lad_profile(const double[::1] w, const double[::1] y, double b, double* r) noexcept nogil:
    cdef Py_ssize_t i, n = w.shape[0], k = (n - 1) // 2
    cdef double med, acc = 0.0
    for i in range(n):
        r[i] = y[i] - b * w[i]
    nth_element(r, r + k, r + n)
    med = r[k]
    for i in range(n):
        acc += r[i] - med if r[i] >= med else med - r[i]
    return acc


def lad_line(const double[::1] w, const double[::1] y, double lo, double hi, double tol, long max_eval):
    """Golden-section minimization of b -> min_c sum |y - c - b w| on [lo, hi]."""
    cdef Py_ssize_t n = w.shape[0]
    cdef vector[double] work
    cdef double a = lo, c = hi, x1, x2, f1, f2, mid, fm, bx, bf
    cdef long nev
    work.resize(n)
    with nogil:
        x1 = c - INV_PHI * (c - a)
        x2 = a + INV_PHI * (c - a)
        f1 = _lad_profile(w, y, x1, work.data())
        f2 = _lad_profile(w, y, x2, work.data())
        nev = 2
        while c - a > tol and nev < max_eval:
            if f1 <= f2:
                c = x2
                x2 = x1
                f2 = f1
                x1 = c - INV_PHI * (c - a)
                f1 = _lad_profile(w, y, x1, work.data())
            else:
                a = x1
                x1 = x2
                f1 = f2
                x2 = a + INV_PHI * (c - a)
                f2 = _lad_profile(w, y, x2, work.data())
            nev += 1
        mid = 0.5 * (a + c)
        fm = _lad_profile(w, y, mid, work.data())
        nev += 1
        bx, bf = mid, fm
        if f1 < bf or (f1 == bf and x1 < bx):
            bx, bf = x1, f1
        if f2 < bf or (f2 == bf and x2 < bx):
            bx, bf = x2, f2
    return bx, bf, nev
