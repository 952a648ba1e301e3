"""Selects the slit-pair integration kernel at import time.

The compiled Cython module is used when it was built; otherwise the NumPy
implementation.  Set ``PERIODIC_WITNESS_KERNEL=python`` to force the fallback.
Non-Gaussian profiles always run on the NumPy kernel.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_KERNELS = {"python": _kernels_py}
if _compiled is not None:
    _KERNELS["compiled"] = _compiled


def available() -> list[str]:
    return sorted(_KERNELS)


def _default() -> str:
    forced = os.environ.get("PERIODIC_WITNESS_KERNEL", "").strip().lower()
    if forced:
        if forced not in _KERNELS:
            raise ImportError(f"requested kernel {forced!r} is not available; have {available()}")
        return forced
    return "compiled" if _compiled is not None else "python"


DEFAULT = _default()


def get(name: str | None = None, *, gaussian: bool = True):
    """Kernel module by name (``None`` picks the import-time default)."""
    if not gaussian:
        return _kernels_py
    name = name or DEFAULT
    try:
        return _KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; have {available()}") from None
