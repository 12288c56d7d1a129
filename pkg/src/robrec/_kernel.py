"""Selects the simplex pivot kernel at import time.

Prefers the compiled Cython kernel when the extension built; otherwise
falls back to the NumPy implementation.  Set ``ROBREC_PURE=1`` to force
the fallback (used by the benchmark and the backend-parity tests).
"""

import os

from . import _simplex_py

if os.environ.get("ROBREC_PURE"):
    simplex_run = _simplex_py.simplex_run
    BACKEND = "python"
else:
    try:
        from ._simplex_cy import simplex_run

        BACKEND = "cython"
    except ImportError:
        simplex_run = _simplex_py.simplex_run
        BACKEND = "python"

OPTIMAL = _simplex_py.OPTIMAL
INFEASIBLE = _simplex_py.INFEASIBLE
UNBOUNDED = _simplex_py.UNBOUNDED
PIVOT_LIMIT = _simplex_py.PIVOT_LIMIT
NUMERICAL = _simplex_py.NUMERICAL
