"""Compare the compiled kernel backend against the pure-numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

The script times the three hot kernels on representative workloads and a
full gate evaluation, printing per-backend timings and the speedup. Both
backends are imported directly so no environment juggling is needed.
"""

from __future__ import annotations

import time

import numpy as np

from fastgates import _kernels_py
from fastgates.gatekernel import evaluate_kicks, ThermalState
from fastgates.trap import calibrate

try:
    from fastgates import _speedups
except ImportError:
    _speedups = None


def _time(fn, *args, repeats=200):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(impl, rng):
    n_kicks = 200
    coeffs = rng.normal(size=17) * 0.2
    coeffs[8] = 1.0
    t = np.sort(rng.uniform(0.0, 9.4, n_kicks))
    w = rng.choice([-1.0, 1.0], n_kicks)
    p = rng.normal(size=n_kicks)
    q = rng.normal(size=n_kicks)
    dp = rng.normal(size=n_kicks)
    dq = rng.normal(size=n_kicks)
    return {
        "envelope_series": _time(impl.envelope_series, coeffs, -8, 40.0, 0.0, t),
        "pair_sum": _time(impl.pair_sum, w, p, q),
        "pair_sum_grad": _time(impl.pair_sum_grad, w, p, q, dp, dq),
    }


def bench_evaluate(rng):
    """Full metric evaluation; exercises whichever backend is active."""
    trap = calibrate(q_x=0.5, rf_ratio=40.0, chi=-0.014, eta=0.15)
    thermal = ThermalState(0.0, 0.0)
    t = np.sort(rng.uniform(0.0, 9.4, 200))
    w = rng.choice([-1.0, 1.0], 200)
    return _time(evaluate_kicks, t, w, 9.4248, trap, thermal, repeats=100)


def main():
    rng = np.random.default_rng(0)
    pure = bench_backend(_kernels_py, np.random.default_rng(0))
    rows = []
    if _speedups is None:
        print("compiled backend not available; showing pure backend only")
        for name, tp in pure.items():
            rows.append((name, None, tp))
    else:
        fast = bench_backend(_speedups, np.random.default_rng(0))
        for name in pure:
            rows.append((name, fast[name], pure[name]))

    print(f"{'kernel':18s} {'compiled':>12s} {'pure numpy':>12s} {'speedup':>8s}")
    for name, tf, tp in rows:
        if tf is None:
            print(f"{name:18s} {'-':>12s} {tp * 1e6:10.1f}us {'-':>8s}")
        else:
            print(
                f"{name:18s} {tf * 1e6:10.1f}us {tp * 1e6:10.1f}us "
                f"{tp / tf:7.1f}x"
            )

    full = bench_evaluate(rng)
    from fastgates.kernels import BACKEND

    print(f"\nfull evaluate_kicks (200 kicks, active backend={BACKEND}): "
          f"{full * 1e6:.0f}us")


if __name__ == "__main__":
    main()
