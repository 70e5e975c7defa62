# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled semi-discrete recursion (see _fallback.py for the reference version)."""

from libc.math cimport exp, log, INFINITY
from libc.stdlib cimport malloc, free



cdef double _recursion(const double[:] log_d, const double[:, :] incr, double dt,
                       double* y, double* ebuf) noexcept nogil:
    cdef Py_ssize_t n_lev = incr.shape[0]
    cdef Py_ssize_t m = incr.shape[1]
    cdef Py_ssize_t l, j
    cdef double c = -INFINITY, b, bmax, acc, g_prev, g, top, c_new, dl, f_d, f_i, half = 0.5 * dt
    for l in range(n_lev):
        # Brownian path on the grid, reference value at its maximum
        b = 0.0
        bmax = 0.0
        ebuf[0] = 0.0
        for j in range(m):
            b = b + incr[l, j]
            ebuf[j + 1] = b
            if b > bmax:
                bmax = b
        for j in range(m + 1):
            ebuf[j] = exp(ebuf[j] - bmax)
        dl = log_d[l]
        if l == 0 or c == -INFINITY:
            # only the boundary term
            c = dl + bmax
            for j in range(m + 1):
                y[j] = ebuf[j]
            continue
        # trapezoid running integral of y / e^{B - bmax}, stored in y
        g_prev = y[0] / ebuf[0]
        y[0] = 0.0
        acc = 0.0
        for j in range(1, m + 1):
            g = y[j] / ebuf[j]
            acc = acc + half * (g_prev + g)
            g_prev = g
            y[j] = acc
        top = acc
        if top > 0.0:
            c_new = c + log(top)
        else:
            c_new = -INFINITY
        if dl + bmax > c_new:
            c_new = dl + bmax
        f_d = exp(dl + bmax - c_new) if dl != -INFINITY else 0.0
        f_i = exp(c - c_new)
        for j in range(m + 1):
            y[j] = ebuf[j] * (f_d + f_i * y[j])
        c = c_new
    return c + log(y[m])


def log_partition(const double[:] log_d, const double[:, :] incr, double dt):
    """log Z_N(tau) for one disorder sample.

    ``log_d`` holds ln D[l] (may be -inf); ``incr`` is the (N, M) array of
    Brownian increments including drift.
    """
    cdef Py_ssize_t m = incr.shape[1]
    cdef double out
    cdef double* y = <double*> malloc((m + 1) * sizeof(double))
    cdef double* ebuf = <double*> malloc((m + 1) * sizeof(double))
    if y == NULL or ebuf == NULL:
        free(y)
        free(ebuf)
        raise MemoryError()
    with nogil:
        out = _recursion(log_d, incr, dt, y, ebuf)
    free(y)
    free(ebuf)
    return out
