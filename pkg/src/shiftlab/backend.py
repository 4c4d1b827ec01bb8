"""Kernel backend selection.

The enumeration and sampling kernels exist twice: a numba-jitted version and a
pure-numpy one.  ``SHIFTLAB_BACKEND`` picks the implementation:

* ``numba``  -- require the jitted kernels (raise if numba is missing),
* ``numpy``  -- force the pure-numpy fallbacks,
* unset / ``auto`` -- numba when importable, numpy otherwise.

Both backends return identical results; ``benchmarks/bench_backends.py``
compares their speed.
"""
from __future__ import annotations

import os

_ENV = "SHIFTLAB_BACKEND"

try:
    import numba  # noqa: F401

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def backend_name() -> str:
    """Resolve the active backend from the environment ("numba" or "numpy")."""
    choice = os.environ.get(_ENV, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if _HAVE_NUMBA else "numpy"
    if choice == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError(f"{_ENV}=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"unrecognized {_ENV}={choice!r} (use numba|numpy|auto)")


def use_numba() -> bool:
    return backend_name() == "numba"
