"""Backend selection for the numeric kernels.

Set ``QCHAR_DISABLE_NUMBA=1`` to force the pure-numpy path (also used when
numba is not importable).  :func:`set_backend` switches at runtime, which the
tests and the benchmark use to compare both paths.
"""
from __future__ import annotations

import os

_FALSEY = {"", "0", "false", "no", "off"}

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

_backend = "numba" if HAVE_NUMBA and os.environ.get("QCHAR_DISABLE_NUMBA", "").lower() in _FALSEY else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise."""
    if HAVE_NUMBA:
        from numba import njit as _njit

        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, _backend = _backend, name
    return prev
