"""Numba switch.

Kernels are written once as plain Python over numpy arrays.  When numba is
importable and ``CURFLOW_DISABLE_NUMBA`` is not set to ``1`` they are compiled
with ``njit``; otherwise the plain functions run as-is.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("CURFLOW_DISABLE_NUMBA", "0") != "1"


def kernel(fn):
    """Compile ``fn`` with numba when enabled; keep the Python original as ``fn.py``."""
    if not USE_NUMBA:
        fn.py = fn
        return fn
    compiled = numba.njit(cache=True)(fn)
    compiled.py = fn
    return compiled
