# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot numerical kernels.

Mirrors fastgates._kernels_py; fastgates.kernels picks one at import time.
Keep the two in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

BACKEND = "compiled"


def envelope_series(coeffs, n_min, rf_ratio, rf_phase, t):
    """Periodic envelope series of a Floquet mode function.

    Returns (f_c, f_s, df_c, df_s) arrays over t; see the numpy twin for
    the full docstring.
    """
    cdef double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef double[::1] tt = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
    cdef Py_ssize_t nc = c.shape[0]
    cdef Py_ssize_t nt = tt.shape[0]
    cdef long nmin = n_min
    cdef double om = rf_ratio
    cdef double ph = rf_phase

    f_c_arr = np.empty(nt, dtype=np.float64)
    f_s_arr = np.empty(nt, dtype=np.float64)
    df_c_arr = np.empty(nt, dtype=np.float64)
    df_s_arr = np.empty(nt, dtype=np.float64)
    cdef double[::1] f_c = f_c_arr
    cdef double[::1] f_s = f_s_arr
    cdef double[::1] df_c = df_c_arr
    cdef double[::1] df_s = df_s_arr

    cdef Py_ssize_t i, k
    cdef double acc_c, acc_s, acc_dc, acc_ds, ang, cn, w, cv, sv, nfreq
    for i in range(nt):
        acc_c = 0.0
        acc_s = 0.0
        acc_dc = 0.0
        acc_ds = 0.0
        for k in range(nc):
            cn = c[k]
            nfreq = (nmin + k) * om
            ang = nfreq * tt[i] + (nmin + k) * ph
            cv = cos(ang)
            sv = sin(ang)
            w = cn * nfreq
            acc_c += cn * cv
            acc_s += cn * sv
            acc_dc -= w * sv
            acc_ds += w * cv
        f_c[i] = acc_c
        f_s[i] = acc_s
        df_c[i] = acc_dc
        df_s[i] = acc_ds
    return f_c_arr, f_s_arr, df_c_arr, df_s_arr


def pair_sum(w, p, q):
    """Ordered-pair antisymmetric sum  sum_{n > m} w_n w_m (p_m q_n - p_n q_m)."""
    cdef double[::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] pp = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = ww.shape[0]
    if n < 2:
        return 0.0
    cdef double acc = 0.0
    cdef double a = 0.0
    cdef double b = 0.0
    cdef Py_ssize_t k
    for k in range(n):
        acc += ww[k] * (qq[k] * a - pp[k] * b)
        a += ww[k] * pp[k]
        b += ww[k] * qq[k]
    return acc


def pair_sum_grad(w, p, q, dp, dq):
    """pair_sum plus its gradient with respect to each kick time."""
    cdef double[::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] pp = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] dpp = np.ascontiguousarray(dp, dtype=np.float64)
    cdef double[::1] dqq = np.ascontiguousarray(dq, dtype=np.float64)
    cdef Py_ssize_t n = ww.shape[0]
    grad_arr = np.zeros(n, dtype=np.float64)
    if n < 2:
        return 0.0, grad_arr
    cdef double[::1] grad = grad_arr
    cdef double value = 0.0
    cdef double a = 0.0
    cdef double b = 0.0
    cdef double tp = 0.0
    cdef double tq = 0.0
    cdef Py_ssize_t k
    for k in range(n):
        tp += ww[k] * pp[k]
        tq += ww[k] * qq[k]
    # a, b are prefix sums over m < k; sp, sq suffix sums over m > k
    cdef double sp, sq
    for k in range(n):
        value += ww[k] * (qq[k] * a - pp[k] * b)
        sp = tp - a - ww[k] * pp[k]
        sq = tq - b - ww[k] * qq[k]
        grad[k] = ww[k] * (dqq[k] * a - dpp[k] * b) + ww[k] * (dpp[k] * sq - dqq[k] * sp)
        a += ww[k] * pp[k]
        b += ww[k] * qq[k]
    return value, grad_arr
