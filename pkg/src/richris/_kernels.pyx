# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, cos, sin, fabs, M_PI

cnp.import_array()

cdef double EULER_GAMMA = 0.57721566490153286061
cdef double SERIES_CUTOFF = 12.0
cdef int SERIES_TERMS = 60
cdef int ASYMPTOTIC_TERMS = 30


cdef void _series(double x, double* j0, double* y0) noexcept nogil:
    cdef double q = 0.25 * x * x
    cdef double term = 1.0, js = 1.0, ys = 0.0, harmonic = 0.0
    cdef int k
    for k in range(1, SERIES_TERMS):
        term = -term * q / (k * k)
        harmonic += 1.0 / k
        js += term
        ys -= harmonic * term
        if k * k > q and fabs(term) * (harmonic + 1.0) < 1e-18:
            break
    j0[0] = js
    y0[0] = (2.0 / M_PI) * ((log(0.5 * x) + EULER_GAMMA) * js + ys)


cdef void _asymptotic(double x, double* j0, double* y0) noexcept nogil:
    cdef double z = 8.0 * x
    cdef double p = 1.0, q = 0.0, term = 1.0, size, last = 1e300, sign
    cdef int k
    for k in range(1, 2 * ASYMPTOTIC_TERMS):
        term = term * (-(2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * z)
        size = fabs(term)
        if size >= last:
            break
        last = size
        if size < 1e-17:
            break
        sign = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2:
            q += sign * term
        else:
            p += sign * term
    cdef double chi = x - 0.25 * M_PI
    cdef double amp = sqrt(2.0 / (M_PI * x))
    cdef double c = cos(chi), s = sin(chi)
    j0[0] = amp * (p * c - q * s)
    y0[0] = amp * (p * s + q * c)


def bessel_j0_y0(x):
    cdef cnp.ndarray[double, ndim=1] xs = np.ascontiguousarray(np.ravel(x), dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], i
    cdef cnp.ndarray[double, ndim=1] j = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] y = np.empty(n)
    cdef double jv, yv
    with nogil:
        for i in range(n):
            if xs[i] < SERIES_CUTOFF:
                _series(xs[i], &jv, &yv)
            else:
                _asymptotic(xs[i], &jv, &yv)
            j[i] = jv
            y[i] = yv
    shape = np.shape(x)
    return j.reshape(shape), y.reshape(shape)


def hankel0_2(x):
    j0, y0 = bessel_j0_y0(x)
    return j0 - 1j * y0


cdef int _solve_small(double complex[:, ::1] a, double complex[::1] b, int n) noexcept nogil:
    """In-place Gaussian elimination with partial pivoting; b holds the solution."""
    cdef int col, row, piv, c
    cdef double best, mag
    cdef double complex tmp, factor
    for col in range(n):
        piv = col
        best = abs(a[col, col])
        for row in range(col + 1, n):
            mag = abs(a[row, col])
            if mag > best:
                best = mag
                piv = row
        if best == 0.0:
            return 1
        if piv != col:
            for c in range(n):
                tmp = a[col, c]
                a[col, c] = a[piv, c]
                a[piv, c] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            if factor != 0:
                for c in range(col, n):
                    a[row, c] = a[row, c] - factor * a[col, c]
                b[row] = b[row] - factor * b[col]
    for row in range(n - 1, -1, -1):
        tmp = b[row]
        for c in range(row + 1, n):
            tmp = tmp - a[row, c] * b[c]
        b[row] = tmp / a[row, row]
    return 0


def flip_scan(m, groups, deltas, rx, tx):
    cdef double complex[:, ::1] mv = np.ascontiguousarray(m, dtype=np.complex128)
    cdef long[:, ::1] gv = np.ascontiguousarray(groups, dtype=np.int64)
    cdef double complex[:, ::1] dv = np.ascontiguousarray(deltas, dtype=np.complex128)
    cdef long[::1] rxv = np.ascontiguousarray(np.atleast_1d(rx), dtype=np.int64)
    cdef long t = tx
    cdef Py_ssize_t ng = gv.shape[0], k = gv.shape[1], nr = rxv.shape[0]
    out = np.empty((ng, nr), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    cdef double complex[:, ::1] core = np.empty((k, k), dtype=np.complex128)
    cdef double complex[::1] rhs = np.empty(k, dtype=np.complex128)
    cdef Py_ssize_t g, a, b, r
    cdef double complex acc
    cdef int failed = 0
    with nogil:
        for g in range(ng):
            for a in range(k):
                for b in range(k):
                    core[a, b] = mv[gv[g, a], gv[g, b]]
                core[a, a] = core[a, a] + 1.0 / dv[g, a]
                rhs[a] = mv[gv[g, a], t]
            if _solve_small(core, rhs, <int>k):
                failed = 1
                break
            for r in range(nr):
                acc = mv[rxv[r], t]
                for a in range(k):
                    acc = acc - mv[rxv[r], gv[g, a]] * rhs[a]
                ov[g, r] = acc
    if failed:
        raise np.linalg.LinAlgError("singular update in flip scan")
    return out
