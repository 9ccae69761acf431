"""Kernel dispatch: numba-jitted loops by default, pure numpy on request.

Set ``POSEBOX_DISABLE_NUMBA=1`` to force the numpy path (the env flag is
read once at import). ``NUMBA_ACTIVE`` reports which path is live;
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

_flag = os.environ.get("POSEBOX_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag in {"1", "true", "yes", "on"}

if _disabled:
    from . import numpy_impl as _impl
    NUMBA_ACTIVE = False
else:
    try:
        from . import numba_impl as _impl  # type: ignore[no-redef]
        NUMBA_ACTIVE = True
    except ImportError:
        from . import numpy_impl as _impl  # type: ignore[no-redef]
        NUMBA_ACTIVE = False

gaussian_peak_max = _impl.gaussian_peak_max
limb_field_accumulate = _impl.limb_field_accumulate
find_strict_peaks = _impl.find_strict_peaks
line_integral_score = _impl.line_integral_score
resample_bilinear = _impl.resample_bilinear

__all__ = [
    "NUMBA_ACTIVE",
    "gaussian_peak_max",
    "limb_field_accumulate",
    "find_strict_peaks",
    "line_integral_score",
    "resample_bilinear",
]
