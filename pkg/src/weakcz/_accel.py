"""Backend switch for the hot loops.

Every numeric kernel in the package exists twice: a numba ``@njit`` version
and a pure-numpy version with the same signature.  The numba path is used
when numba imports cleanly and ``WEAKCZ_NUMBA`` is not set to ``0``.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("WEAKCZ_NUMBA", "1").strip().lower()

try:
    import numba as _numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "off", "no")


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or the identity when numba is absent."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def set_backend(name: str) -> None:
    """Switch backends at runtime (used by the tests and the benchmark)."""
    global USE_NUMBA
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not importable")
        USE_NUMBA = True
    elif name == "numpy":
        USE_NUMBA = False
    else:
        raise ValueError(f"unknown backend {name!r}")
