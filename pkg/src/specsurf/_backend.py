"""Numba/NumPy backend selection for the hot numeric kernels.

Every performance-critical inner loop in this package is written once in
loop style and compiled with ``numba.njit`` when the numba backend is
active.  Setting the environment variable ``SPECSURF_NUMBA=0`` (before
import) selects the pure-Python/NumPy fallback path instead; the results
are identical, only slower.  ``benchmarks/backend_bench.py`` compares the
two paths on representative workloads.
"""
from __future__ import annotations

import os

_env = os.environ.get("SPECSURF_NUMBA", "1").strip().lower()
_want_numba = _env not in ("0", "false", "off", "no")

NUMBA_ENABLED = False

if _want_numba:
    try:
        import numba as _numba

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _numba = None
else:
    _numba = None


def njit(*args, **kwargs):
    """``numba.njit`` when the numba backend is active, identity otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    # plain decorator usage: @njit or @njit(...)
    if args and callable(args[0]) and len(args) == 1 and not kwargs:
        return args[0]

    def _wrap(func):
        return func

    return _wrap


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
