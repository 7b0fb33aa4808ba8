# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for Fourier-Bessel design-matrix assembly.

The only numerically heavy primitive is J_m(l * rho) over hundreds of
thousands of points for thousands of (m, l) pairs. scipy's jv is accurate but
slow for orders above ~30, so the kernel evaluates integer-order J_m with the
classic three-term recurrences seeded by cephes j0/j1 (forward recurrence for
x > m, Miller's normalized downward recurrence for x <= m), which is accurate
to ~1e-13 absolute across the table's (m, x) range.
"""

from libc.math cimport cos, fabs, sin, sqrt

from scipy.special.cython_special cimport j0, j1


cdef double _jn(int m, double x) nogil:
    cdef int n, top
    cdef double prev, cur, tmp, nxt, ssum, out, two_over_x
    if m == 0:
        return j0(x)
    if m == 1:
        return j1(x)
    if x <= 1e-12:
        return 0.0
    if x > m:
        # forward recurrence, stable for oscillatory regime
        prev = j0(x)
        cur = j1(x)
        for n in range(1, m):
            tmp = cur
            cur = (2.0 * n / x) * cur - prev
            prev = tmp
        return cur
    # Miller's downward recurrence with Neumann-series normalization
    top = m + <int>sqrt(40.0 * m) + 20
    if top & 1:
        top += 1
    prev = 0.0          # J~_{n+1}
    cur = 1e-30         # J~_n
    ssum = 0.0
    out = 0.0
    two_over_x = 2.0 / x
    for n in range(top, 0, -1):
        nxt = n * two_over_x * cur - prev
        prev = cur
        cur = nxt
        if fabs(cur) > 1e250:
            cur *= 1e-250
            prev *= 1e-250
            ssum *= 1e-250
            out *= 1e-250
        if n - 1 == m:
            out = cur
        if (n - 1) > 0 and ((n - 1) & 1) == 0:
            ssum += 2.0 * cur
    ssum += cur  # J~_0
    return out / ssum


def bessel_jn_array(int m, double[::1] x, double[::1] out):
    """J_m at each x (for backend parity tests and benchmarks)."""
    cdef Py_ssize_t i, n = x.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _jn(m, x[i])


def fill_design(double[::1] rho, double[::1] phi, int[::1] morder,
                double[::1] lvals, double[::1] amp, int[::1] kind,
                double[:, ::1] out):
    """Fill the design-matrix block out[j, i] = amp[j] * J_{m_j}(l_j rho_i) * T_j(phi_i).

    T_j is 1 (kind 0), cos(m_j phi) (kind 1) or sin(m_j phi) (kind 2). The
    trig factor is cached between consecutive columns with equal m, so the
    caller should order columns grouped by m.
    """
    cdef Py_ssize_t ncols = morder.shape[0]
    cdef Py_ssize_t npts = rho.shape[0]
    cdef Py_ssize_t j, i
    cdef int m, kd, cached_m = -1
    cdef double l, a
    cdef double[::1] cosm = None
    cdef double[::1] sinm = None
    import numpy as _np
    cosm_arr = _np.empty(npts)
    sinm_arr = _np.empty(npts)
    cosm = cosm_arr
    sinm = sinm_arr
    for j in range(ncols):
        m = morder[j]
        kd = kind[j]
        l = lvals[j]
        a = amp[j]
        if kd != 0 and m != cached_m:
            with nogil:
                for i in range(npts):
                    cosm[i] = cos(m * phi[i])
                    sinm[i] = sin(m * phi[i])
            cached_m = m
        with nogil:
            if kd == 0:
                for i in range(npts):
                    out[j, i] = a * _jn(m, l * rho[i])
            elif kd == 1:
                for i in range(npts):
                    out[j, i] = a * _jn(m, l * rho[i]) * cosm[i]
            else:
                for i in range(npts):
                    out[j, i] = a * _jn(m, l * rho[i]) * sinm[i]
