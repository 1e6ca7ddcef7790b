"""Kernel selection: compiled extension when present, numpy fallback.

Set ``MECHSKETCH_PURE=1`` to force the pure-Python kernel even when the
extension built; useful for benchmarking and debugging.
"""

from __future__ import annotations

import os

from . import _pykernel


def _load_compiled():
    try:
        from . import _ckernel
        return _ckernel
    except ImportError:
        return None


_compiled = _load_compiled()


def kernel(name: str | None = None):
    """Return a kernel module: 'compiled', 'pure', or the default choice."""
    if name == "pure":
        return _pykernel
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel is not available")
        return _compiled
    if name is not None:
        raise ValueError(f"unknown kernel {name!r}")
    if os.environ.get("MECHSKETCH_PURE") == "1":
        return _pykernel
    return _compiled if _compiled is not None else _pykernel


def compiled_available() -> bool:
    return _compiled is not None


def kernel_name(mod) -> str:
    return "compiled" if getattr(mod, "COMPILED", False) else "pure"
