"""Backend selection for the hot kernels.

Every loop-heavy kernel in this package exists twice: a numba ``@njit``
version and a vectorized pure-numpy fallback.  The active backend is chosen
once at import time:

* ``GRAMCERT_DISABLE_NUMBA=1`` (or any non-empty value other than ``0``)
  forces the numpy path;
* otherwise numba is used when importable, numpy when it is not.

``benchmarks/bench_backends.py`` compares the two paths head to head.
Results of the two backends agree to floating round-off, not bitwise;
within one backend every kernel is deterministic.
"""

import os

ENV_FLAG = "GRAMCERT_DISABLE_NUMBA"


def _numba_requested() -> bool:
    val = os.environ.get(ENV_FLAG, "").strip()
    return val in ("", "0")


NUMBA_AVAILABLE = False
if _numba_requested():
    try:
        import numba  # noqa: F401

        NUMBA_AVAILABLE = True
    except ImportError:  # pragma: no cover - environment dependent
        NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE


def njit(**kwargs):
    """Return numba.njit(**kwargs) when active, else a no-op decorator.

    Only used on kernels that also ship a numpy twin; the undecorated
    Python source is never the selected path.
    """
    if USE_NUMBA:
        from numba import njit as _njit

        kwargs.setdefault("cache", True)
        return _njit(**kwargs)

    def passthrough(fn):
        return fn

    return passthrough


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
