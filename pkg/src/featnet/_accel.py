"""Backend switch for the numeric kernels.

``FEATNET_BACKEND=numpy`` forces the pure-numpy kernels and skips importing
numba altogether; anything else (or unset) uses numba when it is importable.
"""

import os

REQUESTED = os.environ.get("FEATNET_BACKEND", "numba").strip().lower() or "numba"

try:
    if REQUESTED == "numpy":
        raise ImportError("numba disabled by FEATNET_BACKEND")
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:
    _numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def thread_cap() -> int:
    """Worker cap from FEATNET_THREADS (0 or unset means one per CPU)."""
    raw = os.environ.get("FEATNET_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value <= 0:
        value = os.cpu_count() or 1
    return value
