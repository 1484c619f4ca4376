"""Optional numba acceleration.

Set ``GRASSAVG_DISABLE_NUMBA=1`` to run every kernel as plain numpy code.
Kernels decorated with `jit` keep the original function on ``.py_func`` in
both modes, which is what the benchmark and equivalence tests compare.
"""
import os

_FLAG = os.environ.get("GRASSAVG_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def jit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn
