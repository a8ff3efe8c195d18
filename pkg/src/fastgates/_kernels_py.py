"""Pure numpy implementations of the hot numerical kernels.

Mirrors the compiled extension in fastgates._speedups; fastgates.kernels
picks one of the two at import time. Keep the two in lockstep.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def envelope_series(coeffs, n_min, rf_ratio, rf_phase, t):
    """Evaluate the periodic envelope series of a Floquet mode function.

    Parameters
    ----------
    coeffs : (nc,) float array
        Fourier coefficients C_n ordered n = n_min .. n_min + nc - 1.
    n_min : int
        Harmonic index of coeffs[0].
    rf_ratio : float
        Drive frequency in trap units.
    rf_phase : float
        Drive phase offset.
    t : (nt,) float array
        Evaluation times.

    Returns
    -------
    f_c, f_s, df_c, df_s : (nt,) float arrays
        Cosine and sine envelopes sum_n C_n cos/sin(n (rf_ratio t + rf_phase))
        and their time derivatives.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = np.arange(n_min, n_min + coeffs.size, dtype=float)
    ang = np.multiply.outer(t, n * rf_ratio) + n * rf_phase
    cos = np.cos(ang)
    sin = np.sin(ang)
    dw = coeffs * n * rf_ratio
    f_c = cos @ coeffs
    f_s = sin @ coeffs
    df_c = -(sin @ dw)
    df_s = cos @ dw
    return f_c, f_s, df_c, df_s


def pair_sum(w, p, q):
    """Ordered-pair antisymmetric sum  sum_{n > m} w_n w_m (p_m q_n - p_n q_m).

    Runs in O(N) via prefix sums.
    """
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if w.size < 2:
        return 0.0
    cp = np.cumsum(w * p)
    cq = np.cumsum(w * q)
    # prefix sums over m < n
    a = np.concatenate(([0.0], cp[:-1]))
    b = np.concatenate(([0.0], cq[:-1]))
    return float(np.sum(w * (q * a - p * b)))


def pair_sum_grad(w, p, q, dp, dq):
    """pair_sum plus its gradient with respect to each kick time.

    dp, dq are the time derivatives of p, q at each kick. Returns
    (value, grad) with grad[k] = d(value)/d t_k.
    """
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    dp = np.asarray(dp, dtype=float)
    dq = np.asarray(dq, dtype=float)
    n = w.size
    if n < 2:
        return 0.0, np.zeros(n)
    wp = w * p
    wq = w * q
    cp = np.cumsum(wp)
    cq = np.cumsum(wq)
    a = np.concatenate(([0.0], cp[:-1]))   # sum_{m<k} w_m p_m
    b = np.concatenate(([0.0], cq[:-1]))   # sum_{m<k} w_m q_m
    value = float(np.sum(w * (q * a - p * b)))
    # suffix sums over n > k
    sp = cp[-1] - cp
    sq = cq[-1] - cq
    grad = w * (dq * a - dp * b) + w * (dp * sq - dq * sp)
    return value, grad
