"""Backend selection for the hot kernels.

Kernels in :mod:`sigl.kernels` exist twice: a numba ``@njit`` version and a
pure-numpy version.  The numba path is used when numba imports cleanly and
the environment variable ``SIGL_NUMBA`` is not set to ``0``/``false``/``off``.
The flag is read once at import time; call :func:`set_backend` to switch
inside a running process (tests and the benchmark do this).
"""

from __future__ import annotations

import os

try:
    import numba as _numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    NUMBA_AVAILABLE = False

_OFF = {"0", "false", "off", "no", "numpy"}

_use_numba = NUMBA_AVAILABLE and os.environ.get("SIGL_NUMBA", "1").strip().lower() not in _OFF


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if NUMBA_AVAILABLE:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def use_numba() -> bool:
    return _use_numba


def backend_name() -> str:
    return "numba" if _use_numba else "numpy"


def set_backend(name: str) -> str:
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global _use_numba
    previous = backend_name()
    if name == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba backend requested but numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    return previous
