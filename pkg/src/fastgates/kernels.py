"""Kernel backend selection.

Imports the compiled extension when present, otherwise the numpy fallback.
Set FASTGATES_PURE=1 to force the fallback regardless.
"""

from __future__ import annotations

import os

if os.environ.get("FASTGATES_PURE", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
envelope_series = _impl.envelope_series
pair_sum = _impl.pair_sum
pair_sum_grad = _impl.pair_sum_grad
