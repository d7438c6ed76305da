"""Numba switch shared by every hot kernel.

Set ``LANDSCAPE_LAB_NUMBA=0`` to force the pure-numpy code paths (handy when
debugging or on platforms without numba). ``LANDSCAPE_LAB_THREADS`` caps the
number of numba worker threads.
"""
import os

_FALSE = {"0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

USE_NUMBA = numba is not None and os.environ.get("LANDSCAPE_LAB_NUMBA", "1").strip().lower() not in _FALSE


if numba is not None and "NUMBA_THREADING_LAYER" not in os.environ:
    # the system TBB is too old for numba; skip it instead of warning on every launch
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def _apply_thread_cap():
    cap = os.environ.get("LANDSCAPE_LAB_THREADS")
    if not cap or numba is None:
        return
    try:
        n = int(cap)
    except ValueError:
        return
    if n >= 1:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


_apply_thread_cap()


def njit(*args, **kwargs):
    """``numba.njit`` with on-disk caching, or a no-op when numba is off.

    The decorated function stays callable either way; the numpy fallbacks do
    not go through here, they are separate vectorised implementations.
    """
    kwargs.setdefault("cache", True)
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
