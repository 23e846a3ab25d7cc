"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``MICROHD_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from microhd import _fallback


def _load() -> tuple[ModuleType, str]:
    if os.environ.get("MICROHD_PURE_PYTHON") == "1":
        return _fallback, "numpy"
    try:
        from microhd import _kernels
    except ImportError:
        return _fallback, "numpy"
    return _kernels, "cython"


kernels, name = _load()


def get(backend: str | None = None) -> ModuleType:
    """Return the kernel module for ``backend`` ("cython", "numpy" or the active one)."""
    if backend is None:
        return kernels
    if backend == "numpy":
        return _fallback
    if backend == "cython":
        from microhd import _kernels

        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
