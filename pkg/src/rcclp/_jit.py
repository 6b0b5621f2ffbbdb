"""Backend selection for the numeric kernels.

Set ``RCCLP_NO_NUMBA=1`` to force the pure-numpy path. When numba is missing
the numpy path is used regardless.
"""
import os

_DISABLED = os.environ.get("RCCLP_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise returns the function untouched."""
    if _njit is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    return _njit(*args, **kwargs)
