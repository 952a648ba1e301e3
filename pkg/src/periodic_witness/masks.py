"""Periodic d-outcome slit masks.

Mask ``k`` of a family ``(d, T, offset)`` transmits wherever
``k*s <= (z - offset) mod T < (k+1)*s`` with slit width ``s = T/d``.
Equivalently, slit number ``i`` covers ``[offset + i*s, offset + (i+1)*s)``
and belongs to mask ``i mod d``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class MaskSpec:
    d: int
    period: float
    offset: float = 0.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ParameterError(f"mask dimension d must be an integer >= 2, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if not (math.isfinite(self.period) and self.period > 0):
            raise ParameterError(f"mask period must be positive, got {self.period!r}")
        if not math.isfinite(self.offset):
            raise ParameterError(f"mask offset must be finite, got {self.offset!r}")

    @property
    def slit_width(self) -> float:
        return self.period / self.d

    def shifted(self, delta: float) -> "MaskSpec":
        return MaskSpec(self.d, self.period, self.offset + delta)


def _check_index(spec: MaskSpec, k: int) -> int:
    if not 0 <= k < spec.d:
        raise IndexError(f"mask index {k} out of range for d={spec.d}")
    return int(k)


def mask_index(spec: MaskSpec, z):
    """Index of the mask whose slit contains ``z`` (vectorised)."""
    z = np.asarray(z, dtype=float)
    phase = np.mod(z - spec.offset, spec.period)
    k = np.floor(phase / spec.slit_width).astype(np.int64)
    # phase can round up to exactly T for z just below a period boundary
    k = np.minimum(k, spec.d - 1)
    return int(k) if k.ndim == 0 else k


def mask_value(spec: MaskSpec, k: int, z):
    """1 where mask ``k`` transmits, else 0."""
    k = _check_index(spec, k)
    out = (np.asarray(mask_index(spec, z)) == k).astype(np.int8)
    return int(out) if out.ndim == 0 else out


def fourier_coefficient(d: int, N: int) -> complex:
    """Fourier coefficient f_N of the basic mask M_0 with period 1.

    ``M_0(z) = sum_N f_N exp(2 pi i N z / T)``.
    """
    if d < 2:
        raise ParameterError("d must be >= 2")
    if N == 0:
        return complex(1.0 / d)
    u = 2j * math.pi * N
    return (1.0 - cmath.exp(-u / d)) / u


def fourier_power(d: int, N):
    """|f_N|^2 = (1 - cos(2 pi N / d)) / (2 pi^2 N^2), with |f_0|^2 = 1/d^2."""
    N = np.asarray(N, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (1.0 - np.cos(2.0 * np.pi * N / d)) / (2.0 * np.pi**2 * N * N)
    p = np.where(N == 0, 1.0 / d**2, p)
    return float(p) if p.ndim == 0 else p


def slit_range(spec: MaskSpec, lo: float, hi: float) -> tuple[int, int]:
    """Indices ``i0 <= i < i1`` of all slits intersecting ``[lo, hi)``."""
    s = spec.slit_width
    i0 = math.floor((lo - spec.offset) / s)
    i1 = math.ceil((hi - spec.offset) / s)
    return i0, max(i0, i1)


def slit_segments(spec: MaskSpec, k: int, support: tuple[float, float]) -> list[tuple[float, float]]:
    """Maximal sub-intervals ``[a, b)`` of ``support`` where mask ``k`` is 1."""
    k = _check_index(spec, k)
    lo, hi = float(support[0]), float(support[1])
    if not hi > lo:
        return []
    s = spec.slit_width
    i0, i1 = slit_range(spec, lo, hi)
    segments = []
    for i in range(i0, i1):
        if i % spec.d != k:
            continue
        a = max(lo, spec.offset + i * s)
        b = min(hi, spec.offset + (i + 1) * s)
        if b > a:
            segments.append((a, b))
    return segments
