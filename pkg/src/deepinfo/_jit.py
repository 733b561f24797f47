"""Numba switch.

Hot kernels are written twice: a loop version compiled with numba and a
vectorised numpy version. ``USE_NUMBA`` picks which one the public functions
dispatch to. Set ``DEEPINFO_DISABLE_NUMBA=1`` before import to force the numpy
path (useful for debugging and for the parity tests).
"""
import os

_DISABLED = os.environ.get("DEEPINFO_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not _DISABLED


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise.

    Compilation is lazy, so decorating a kernel costs nothing when the numpy
    path is selected.
    """
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)

    def wrap(f):
        if not NUMBA_AVAILABLE:
            return f
        return numba.njit(**opts)(f)

    if func is not None:
        return wrap(func)
    return wrap


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
