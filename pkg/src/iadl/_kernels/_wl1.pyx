# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-wise weighted-l1 ball projection.

Same algorithm as ``_wl1_numpy``: exact breakpoint scan with a bisection
fallback for nearly degenerate weights.
"""

from libc.math cimport fabs
from libc.stdlib cimport free, malloc, qsort

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef struct Breakpoint:
    double ratio
    double wm
    double w2


cdef int _cmp_breakpoint(const void* a, const void* b) noexcept nogil:
    cdef double ra = (<const Breakpoint*> a).ratio
    cdef double rb = (<const Breakpoint*> b).ratio
    if ra < rb:
        return -1
    if ra > rb:
        return 1
    return 0


cdef double _bisect_gamma(const double* mags, const double* w,
                          Py_ssize_t n, double phi) noexcept nogil:
    cdef double lo = 0.0
    cdef double hi = 0.0
    cdef double mid, g, part
    cdef Py_ssize_t i
    for i in range(n):
        if mags[i] / w[i] > hi:
            hi = mags[i] / w[i]
    for _ in range(128):
        mid = 0.5 * (lo + hi)
        g = 0.0
        for i in range(n):
            part = mags[i] - mid * w[i]
            if part > 0.0:
                g += w[i] * part
        if g > phi:
            lo = mid
        else:
            hi = mid
    return hi


def project_rows(cnp.ndarray[cnp.float64_t, ndim=2] v not None,
                 cnp.ndarray[cnp.float64_t, ndim=2] w not None,
                 cnp.ndarray[cnp.float64_t, ndim=1] phi not None,
                 double degenerate_ratio=1e12):
    """Project each row of ``v`` onto its weighted-l1 ball of radius phi[i]."""
    cdef Py_ssize_t n_rows = v.shape[0]
    cdef Py_ssize_t n = v.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.array(v, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ww = np.ascontiguousarray(w, dtype=np.float64)

    cdef Breakpoint* bp = <Breakpoint*> malloc(n * sizeof(Breakpoint))
    cdef double* suf_a = <double*> malloc((n + 1) * sizeof(double))
    cdef double* suf_b = <double*> malloc((n + 1) * sizeof(double))
    cdef double* mags = <double*> malloc(n * sizeof(double))
    if bp == NULL or suf_a == NULL or suf_b == NULL or mags == NULL:
        free(bp); free(suf_a); free(suf_b); free(mags)
        raise MemoryError()

    cdef Py_ssize_t i, j, k
    cdef double wl1, wmin, wmax, radius, gamma, g, part
    cdef const double* vrow
    cdef const double* wrow
    cdef double* orow

    try:
        for i in range(n_rows):
            vrow = &vv[i, 0]
            wrow = &ww[i, 0]
            orow = &out[i, 0]
            radius = phi[i]

            wl1 = 0.0
            wmin = wrow[0]
            wmax = wrow[0]
            for j in range(n):
                mags[j] = fabs(vrow[j])
                wl1 += wrow[j] * mags[j]
                if wrow[j] < wmin:
                    wmin = wrow[j]
                if wrow[j] > wmax:
                    wmax = wrow[j]
            if wl1 <= radius:
                continue
            if radius == 0.0:
                for j in range(n):
                    orow[j] = 0.0
                continue

            if wmax / wmin > degenerate_ratio:
                gamma = _bisect_gamma(mags, wrow, n, radius)
            else:
                for j in range(n):
                    bp[j].ratio = mags[j] / wrow[j]
                    bp[j].wm = wrow[j] * mags[j]
                    bp[j].w2 = wrow[j] * wrow[j]
                qsort(bp, n, sizeof(Breakpoint), _cmp_breakpoint)
                suf_a[n] = 0.0
                suf_b[n] = 0.0
                for j in range(n - 1, -1, -1):
                    suf_a[j] = suf_a[j + 1] + bp[j].wm
                    suf_b[j] = suf_b[j + 1] + bp[j].w2
                gamma = 0.0
                for k in range(n):
                    # g at breakpoint k counts only strictly larger ratios
                    g = suf_a[k + 1] - bp[k].ratio * suf_b[k + 1]
                    if g <= radius:
                        gamma = (suf_a[k] - radius) / suf_b[k]
                        break

            for j in range(n):
                part = mags[j] - gamma * wrow[j]
                if part > 0.0:
                    orow[j] = part if vrow[j] > 0.0 else -part
                else:
                    orow[j] = 0.0
    finally:
        free(bp)
        free(suf_a)
        free(suf_b)
        free(mags)
    return out
