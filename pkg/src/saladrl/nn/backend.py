"""Select between numba-compiled kernels and the plain numpy fallback.

Set ``SALADRL_NUMBA=0`` in the environment to force the numpy path (useful
when debugging or on platforms without numba).  The choice is made once at
import time.
"""
from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("SALADRL_NUMBA", "1") != "0"


def njit(fn):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    if USE_NUMBA:
        return numba.njit(cache=True, fastmath=False)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
