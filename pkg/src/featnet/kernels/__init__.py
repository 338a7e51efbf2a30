"""Hot loops behind a switchable backend.

``numba`` runs the explicit loops in ``_loops`` compiled with ``@njit``;
``numpy`` runs the vectorized fallbacks in ``_vector``. The default follows
``FEATNET_BACKEND`` (see ``featnet._accel``); tests and the benchmark flip it
at runtime with :func:`use_backend`.
"""

from contextlib import contextmanager

from .. import _accel
from . import _vector
from ._loops import EXP_CLIPPED, SIGMOID, STEP

_BACKENDS = {"numpy": _vector}
if _accel.HAVE_NUMBA:
    from . import _loops

    _BACKENDS["numba"] = _loops

_active = "numba" if _accel.HAVE_NUMBA else "numpy"


def available():
    return sorted(_BACKENDS)


def get_backend():
    return _active


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}")
    _active = name


@contextmanager
def use_backend(name):
    prev = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def impl():
    """Module holding the active backend's kernels."""
    return _BACKENDS[_active]


__all__ = ["EXP_CLIPPED", "SIGMOID", "STEP", "available", "get_backend",
           "set_backend", "use_backend", "impl"]
