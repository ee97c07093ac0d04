# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Hermitian Levinson recursion (same contract as _levinson_py).

Complex arithmetic is spelled out on separate real and imaginary arrays, and
the predictor update a_i += k conj(a_{j-i}) is done in place on the pairs
(i, j - i).
"""
import numpy as np
from libc.math cimport log, log1p


def levinson(f, Py_ssize_t n):
    fc = np.ascontiguousarray(f, dtype=np.complex128)
    cdef const double[::1] fr = np.ascontiguousarray(fc.real)
    cdef const double[::1] fi = np.ascontiguousarray(fc.imag)
    log_e_arr = np.empty(n, dtype=np.float64)
    refl_arr = np.zeros(max(n - 1, 0), dtype=np.complex128)
    cdef double[::1] log_e = log_e_arr
    cdef double complex[::1] refl = refl_arr
    cdef double[::1] ar = np.zeros(n)
    cdef double[::1] ai = np.zeros(n)
    cdef Py_ssize_t j, i, l
    cdef double sr, si, kr, ki, xr, xi, yr, yi, mag2
    cdef double e = fr[0]
    if not e > 0:
        return log_e_arr[:0], refl_arr
    log_e[0] = log(e)
    ar[0] = 1.0
    for j in range(1, n):
        sr = 0.0
        si = 0.0
        for i in range(j):
            sr += ar[i] * fr[j - i] - ai[i] * fi[j - i]
            si += ar[i] * fi[j - i] + ai[i] * fr[j - i]
        kr = -sr / e
        ki = -si / e
        refl[j - 1] = kr + 1j * ki
        # pairs (i, j - i) for 1 <= i < j - i use each other's old values
        i = 1
        l = j - 1
        while i < l:
            xr = ar[i]
            xi = ai[i]
            yr = ar[l]
            yi = ai[l]
            ar[i] = xr + kr * yr + ki * yi
            ai[i] = xi + ki * yr - kr * yi
            ar[l] = yr + kr * xr + ki * xi
            ai[l] = yi + ki * xr - kr * xi
            i += 1
            l -= 1
        if i == l:
            xr = ar[i]
            xi = ai[i]
            ar[i] = xr + kr * xr + ki * xi
            ai[i] = xi + ki * xr - kr * xi
        # a_j was zero and a_0 is one
        ar[j] = kr
        ai[j] = ki
        mag2 = kr * kr + ki * ki
        if not (1.0 - mag2) > 0:
            return log_e_arr[:j], refl_arr
        e = e * (1.0 - mag2)
        log_e[j] = log_e[j - 1] + log1p(-mag2)
    return log_e_arr, refl_arr
