"""Kernel backend selection.

The streaming 1NN inner loops exist twice: numba ``@njit`` kernels and a pure
numpy fallback with identical semantics. The active backend is chosen by the
``SNOOPY_BACKEND`` environment variable (``auto`` | ``numba`` | ``numpy``,
default ``auto`` = numba when importable) or programmatically via :func:`use`,
which takes precedence. ``SNOOPY_THREADS`` caps numba worker parallelism.
"""

from __future__ import annotations

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    numba = None
    HAS_NUMBA = False

_override: str | None = None


def use(name: str | None) -> None:
    """Force a backend for this process (``None`` restores env/auto choice)."""
    global _override
    if name is not None:
        name = name.lower()
        if name not in ("numba", "numpy"):
            raise ValueError(f"unknown backend {name!r}")
        if name == "numba" and not HAS_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
    _override = name


def backend_name() -> str:
    """Resolve the active backend name."""
    if _override is not None:
        return _override
    env = os.environ.get("SNOOPY_BACKEND", "auto").lower()
    if env == "numpy":
        return "numpy"
    if env == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("SNOOPY_BACKEND=numba but numba is not importable")
        return "numba"
    return "numba" if HAS_NUMBA else "numpy"


def get_kernels():
    """Return the kernel module for the active backend."""
    if backend_name() == "numba":
        from snoopy import _kernels_numba

        return _kernels_numba
    from snoopy import _kernels_numpy

    return _kernels_numpy


def set_threads(n: int | None = None) -> None:
    """Cap numba parallelism; ``None`` reads SNOOPY_THREADS."""
    if n is None:
        raw = os.environ.get("SNOOPY_THREADS")
        if not raw:
            return
        n = int(raw)
    if HAS_NUMBA and n >= 1:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
