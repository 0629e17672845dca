"""Numba-or-numpy backend selection for the hot Monte Carlo kernels.

The env var AMBISTOP_BACKEND picks the implementation:

* ``auto`` (default): numba when importable, else the vectorized numpy path
* ``numba``:          require numba (ImportError otherwise)
* ``numpy``:          force the pure-numpy path

Both paths consume identical counter-based random streams, so results
agree to floating-point noise; see benchmarks/bench_backends.py.
"""

from __future__ import annotations

import os
import warnings

_ENV_VAR = "AMBISTOP_BACKEND"


def _resolve() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        warnings.warn(f"unknown {_ENV_VAR}={choice!r}, using 'auto'", RuntimeWarning)
        choice = "auto"
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        if choice == "numba":
            raise
        warnings.warn("numba unavailable; falling back to numpy kernels", RuntimeWarning)
        return "numpy"


DEFAULT_BACKEND = _resolve()
USING_NUMBA = DEFAULT_BACKEND == "numba"

if USING_NUMBA:
    from numba import njit
else:  # identity decorator so kernel sources stay importable without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def pick(backend: str | None) -> str:
    """Resolve a per-call backend override against the module default."""
    if backend is None:
        return DEFAULT_BACKEND
    backend = backend.strip().lower()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {backend!r}")
    if backend == "numba" and not USING_NUMBA:
        raise RuntimeError("numba backend requested but numba is not available")
    return backend
