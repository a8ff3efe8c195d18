"""Floquet modes of a periodically modulated harmonic confinement.

A radial normal mode of the two-ion crystal obeys a Mathieu-Hill equation

    x'' + (W/2)^2 [a - 2 q cos(W t + phi)] x = 0

with W the drive-to-reference frequency ratio in trap units. Inside the
first stability region the Floquet solution is

    u(t) = exp(i beta W t / 2) sum_n C_n exp(i n (W t + phi))

with characteristic exponent beta in (0, 1) and real coefficients C_n
(C_0 = 1). The mode oscillates at omega = beta W / 2 with a periodic
micromotion envelope. This module computes beta and C_n by continued
fractions, validates them against direct monodromy integration, and
evaluates the mode function and its envelopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import kernels
from .errors import IntegratorFailure, NoConvergence, NotStable, TruncationFailure

_BETA_EDGE = 1e-9          # keep root brackets strictly inside (0, 1)
_MAX_LADDER_DEPTH = 1 << 15


@dataclass(frozen=True)
class MathieuParams:
    """Operating point of one modulated mode.

    a, q are the standard Mathieu parameters, rf_ratio the drive frequency
    in trap units, rf_phase the drive phase at t = 0.
    """

    a: float
    q: float
    rf_ratio: float
    rf_phase: float = 0.0

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be nonnegative")
        if self.rf_ratio <= 0:
            raise ValueError("rf_ratio must be positive")


@dataclass(frozen=True, eq=False)
class FloquetSolution:
    """Characteristic exponent and Fourier coefficients of one mode.

    coeffs maps harmonic index n to C_n with C_0 = 1. omega is the secular
    frequency beta * rf_ratio / 2 in trap units. residual is the largest
    violation of the three-term recurrence over the retained indices.
    """

    beta: float
    omega: float
    coeffs: dict[int, float]
    n_max: int
    residual: float
    ns: np.ndarray = field(repr=False, default=None)
    cs: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        ns = np.array(sorted(self.coeffs), dtype=int)
        cs = np.array([self.coeffs[n] for n in ns], dtype=float)
        object.__setattr__(self, "ns", ns)
        object.__setattr__(self, "cs", cs)

    @property
    def n_min_index(self) -> int:
        return int(self.ns[0])


def _ladder_sum(a: float, q: float, beta: float, depth: int, sign: int) -> float:
    """Continued-fraction tail T_{sign*1} = C_{sign*1} / C_0.

    Evaluated bottom-up from the deep end where the recurrence is strongly
    diagonally dominant. sign = +1 walks n = depth..1, sign = -1 walks the
    negative ladder.
    """
    t = 0.0
    for k in range(depth, 0, -1):
        d = (a - (2.0 * sign * k + beta) ** 2) / q
        den = d - t
        if den == 0.0:
            den = 1e-300
        t = 1.0 / den
    return t


def _beta_misfit(beta: float, a: float, q: float, depth: int) -> float:
    """Self-consistency function whose root is the characteristic exponent.

    The n = 0 row of the recurrence gives beta^2 = a - q (T_+ + T_-) with
    T_+- the two continued-fraction tails.
    """
    tp = _ladder_sum(a, q, beta, depth, +1)
    tm = _ladder_sum(a, q, beta, depth, -1)
    return beta * beta - a + q * (tp + tm)


def _solve_beta_at_depth(a: float, q: float, depth: int) -> float | None:
    """Bracket and bisect the misfit in (0, 1); None when no root is found."""

    def f(b: float) -> float:
        return _beta_misfit(b, a, q, depth)

    guess = math.sqrt(a + 0.5 * q * q) if a + 0.5 * q * q > 0 else 0.05
    guess = min(max(guess, 1e-4), 1.0 - 1e-4)
    # geometric ladder around the lowest-order estimate, then a uniform scan
    probes = [guess]
    step = 1.0
    for _ in range(12):
        step *= 1.45
        probes.append(guess / step)
        probes.append(guess * step)
    probes = sorted({min(max(p, _BETA_EDGE), 1.0 - _BETA_EDGE) for p in probes})
    for grid in (probes, list(np.linspace(_BETA_EDGE, 1.0 - _BETA_EDGE, 257))):
        vals = []
        for b in grid:
            try:
                v = f(b)
            except (OverflowError, ZeroDivisionError):
                v = math.nan
            vals.append(v)
        for (b1, v1), (b2, v2) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
            if math.isfinite(v1) and math.isfinite(v2) and v1 * v2 <= 0.0:
                if v1 == 0.0:
                    return b1
                return brentq(f, b1, b2, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    return None


def characteristic_exponent(p: MathieuParams, tol: float = 1e-12) -> float:
    """Characteristic exponent beta in (0, 1) for a stable operating point.

    Solves the continued-fraction self-consistency relation, doubling the
    ladder depth until successive solutions agree within tol. Raises
    NotStable outside the first stability region and NoConvergence when the
    depth cap is hit without agreement.
    """
    a, q = p.a, p.q
    if q == 0.0:
        if a <= 0.0 or a >= 1.0:
            raise NotStable(f"(a={a}, q=0) is outside the first stability region")
        return math.sqrt(a)
    depth = 32
    beta_prev = _solve_beta_at_depth(a, q, depth)
    while True:
        depth *= 2
        if depth > _MAX_LADDER_DEPTH:
            raise NoConvergence(
                f"characteristic exponent did not settle to {tol} by depth {_MAX_LADDER_DEPTH}"
            )
        beta_next = _solve_beta_at_depth(a, q, depth)
        if beta_prev is None and beta_next is None:
            if not is_stable(a, q, p.rf_ratio):
                raise NotStable(f"(a={a}, q={q}) is outside the first stability region")
            continue
        if beta_prev is not None and beta_next is not None:
            if abs(beta_next - beta_prev) < tol:
                return beta_next
        beta_prev = beta_next


def fourier_coefficients(
    p: MathieuParams,
    beta: float,
    n_max_cap: int = 64,
    tol: float = 1e-14,
) -> FloquetSolution:
    """Fourier coefficients C_n of the Floquet mode at a known exponent.

    Walks the continued-fraction ratio ladders outward from C_0 = 1 and
    truncates at the first index where both |C_n| and |C_-n| fall below
    tol. Raises TruncationFailure if that never happens within n_max_cap.
    """
    a, q = p.a, p.q
    if not 0.0 < beta < 1.0:
        raise NotStable(f"beta={beta} outside (0, 1)")
    if q == 0.0:
        return FloquetSolution(
            beta=beta,
            omega=0.5 * beta * p.rf_ratio,
            coeffs={0: 1.0},
            n_max=0,
            residual=0.0,
        )
    depth = max(4 * n_max_cap, 256)
    coeffs = {0: 1.0}
    n_max = None
    for sign in (+1, -1):
        # ratio ladder r_k = C_{sign k} / C_{sign (k-1)}
        tails = []
        t = 0.0
        for k in range(depth, 0, -1):
            d = (a - (2.0 * sign * k + beta) ** 2) / q
            den = d - t
            if den == 0.0:
                den = 1e-300
            t = 1.0 / den
            tails.append(t)
        tails.reverse()  # tails[k-1] = ratio at level k
        c = 1.0
        for k in range(1, n_max_cap + 1):
            c *= tails[k - 1]
            coeffs[sign * k] = c
    for k in range(1, n_max_cap + 1):
        if abs(coeffs[k]) < tol and abs(coeffs[-k]) < tol:
            n_max = k
            break
    if n_max is None:
        raise TruncationFailure(
            f"coefficients above {tol} at the n_max_cap={n_max_cap} boundary"
        )
    coeffs = {n: c for n, c in coeffs.items() if abs(n) <= n_max}
    residual = 0.0
    for n in range(-(n_max - 1), n_max):
        lhs = coeffs[n + 1] - ((a - (2.0 * n + beta) ** 2) / q) * coeffs[n] + coeffs[n - 1]
        residual = max(residual, abs(lhs))
    return FloquetSolution(
        beta=beta,
        omega=0.5 * beta * p.rf_ratio,
        coeffs=coeffs,
        n_max=n_max,
        residual=residual,
    )


def solve_mode(p: MathieuParams, tol: float = 1e-12, n_max_cap: int = 64) -> FloquetSolution:
    """Convenience wrapper: exponent plus coefficients in one call."""
    beta = characteristic_exponent(p, tol=tol)
    return fourier_coefficients(p, beta, n_max_cap=n_max_cap)


def envelope_functions(sol: FloquetSolution, p: MathieuParams, t):
    """Periodic envelopes f_c, f_s and their derivatives at times t.

    f_c(t) = sum_n C_n cos(n (W t + phi)), f_s likewise with sine. The mode
    function decomposes as Re u = cos(omega t) f_c - sin(omega t) f_s and
    Im u = sin(omega t) f_c + cos(omega t) f_s.
    """
    scalar = np.isscalar(t)
    f_c, f_s, df_c, df_s = kernels.envelope_series(
        sol.cs, sol.n_min_index, p.rf_ratio, p.rf_phase, np.atleast_1d(t)
    )
    if scalar:
        return float(f_c[0]), float(f_s[0]), float(df_c[0]), float(df_s[0])
    return f_c, f_s, df_c, df_s


def mode_function(sol: FloquetSolution, p: MathieuParams, t):
    """Complex Floquet mode u(t) and its derivative du/dt.

    u(t) = exp(i omega t) (f_c + i f_s) with omega = beta W / 2.
    """
    scalar = np.isscalar(t)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    f_c, f_s, df_c, df_s = kernels.envelope_series(
        sol.cs, sol.n_min_index, p.rf_ratio, p.rf_phase, tt
    )
    w = sol.omega
    phase = np.exp(1j * w * tt)
    env = f_c + 1j * f_s
    denv = df_c + 1j * df_s
    u = phase * env
    du = phase * (1j * w * env + denv)
    if scalar:
        return complex(u[0]), complex(du[0])
    return u, du


def rho(sol: FloquetSolution, p: MathieuParams, t):
    """Envelope-normalization diagnostic 1 + (f_c f_s' - f_s f_c') / omega.

    Periodic in t at the drive frequency; tends to 1 as q -> 0. Note this
    differs from the constant Wronskian normalizer wronskian_rho by the
    time-dependent part of |f_c + i f_s|^2, so it is a diagnostic only and
    the gate kernels divide by wronskian_rho instead.
    """
    scalar = np.isscalar(t)
    f_c, f_s, df_c, df_s = kernels.envelope_series(
        sol.cs, sol.n_min_index, p.rf_ratio, p.rf_phase, np.atleast_1d(t)
    )
    out = 1.0 + (f_c * df_s - f_s * df_c) / sol.omega
    if scalar:
        return float(out[0])
    return out


def wronskian_rho(sol: FloquetSolution) -> float:
    """Constant normalizer [Re u d(Im u)/dt - Im u d(Re u)/dt] / omega.

    Proportional to the Wronskian of u and its conjugate, hence exactly
    time independent; in coefficient form sum_n C_n^2 (1 + 2 n / beta).
    Equals 1 at q = 0 and 1 + O(q^2) in general. This is the divisor used
    by all closed-form kick-response and gate formulas.
    """
    return float(np.sum(sol.cs * sol.cs * (1.0 + 2.0 * sol.ns / sol.beta)))


def hill_trace(a: float, q: float, ode_tol: float = 1e-11) -> float:
    """Trace of the monodromy matrix of u'' + (a - 2 q cos 2 tau) u = 0.

    Integrated over one half drive period tau in [0, pi]; the trace is
    invariant under the drive phase. |trace| < 2 means stable.
    """

    def rhs(tau, y):
        g = a - 2.0 * q * math.cos(2.0 * tau)
        return (y[1], -g * y[0], y[3], -g * y[2])

    res = solve_ivp(
        rhs,
        (0.0, math.pi),
        (1.0, 0.0, 0.0, 1.0),
        method="DOP853",
        rtol=ode_tol,
        atol=ode_tol * 1e-2,
    )
    if not res.success:
        raise IntegratorFailure(f"monodromy integration failed: {res.message}")
    y = res.y[:, -1]
    return float(y[0] + y[3])


def is_stable(a: float, q: float, rf_ratio: float | None = None, ode_tol: float = 1e-11) -> bool:
    """Strict first-region stability test via the monodromy trace.

    rf_ratio is accepted for interface symmetry; the scaled equation and
    hence the verdict do not depend on it.
    """
    return abs(hill_trace(a, q, ode_tol=ode_tol)) < 2.0


def monodromy_exponent(p: MathieuParams, ode_tol: float = 1e-11) -> float:
    """Characteristic exponent from direct monodromy integration.

    Independent of the continued-fraction route; used as its oracle.
    Raises NotStable when |trace| >= 2.
    """
    tr = hill_trace(p.a, p.q, ode_tol=ode_tol)
    if abs(tr) >= 2.0:
        raise NotStable(f"(a={p.a}, q={p.q}): |monodromy trace| = {abs(tr)} >= 2")
    return math.acos(min(max(tr / 2.0, -1.0), 1.0)) / math.pi
