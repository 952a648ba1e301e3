"""Separability bound Q_d(Tx, Tp) as a bracketed series.

With ``gamma = Tx Tp / (2 pi c)`` and mask power spectrum
``|f_N|^2 = (1 - cos(2 pi N / d)) / (2 pi^2 N^2)``, the bound is

    Q = d * sum_N |f_N|^2 B(2 pi N^2 / gamma)

over all integers N.  Because ``0 < B <= 2`` and ``sum_N |f_N|^2 = 1/d``,
partial sums over ``|N| <= N0`` increase toward Q (``lower``) while replacing
every omitted term by its largest value 2 gives a decreasing sequence of upper
bounds (``upper``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ParameterError

TRIP_POINT_ATOL = 1e-12
_BLOCK = 4096


@dataclass(frozen=True)
class BoundResult:
    lower: float
    upper: float
    n_terms: int
    gamma: float
    value: float
    d: int = 0
    trip_point: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower


def b_function(gamma_arg):
    """B(g) = 2 sqrt2 (sqrt2 - sqrt(1 - cos g)) / (1 + cos g).

    Evaluated as the equivalent ``2 / (1 + |sin(g/2)|)``, which has no
    removable singularity at ``cos g = -1`` (where B = 1).
    """
    g = np.asarray(gamma_arg, dtype=float)
    out = 2.0 / (1.0 + np.abs(np.sin(0.5 * g)))
    return float(out) if out.ndim == 0 else out


def b_function_naive(gamma_arg: float) -> float:
    """Literal formula, kept for cross-checks away from cos g = -1."""
    cg = math.cos(gamma_arg)
    if abs(1.0 + cg) < 1e-8:
        # with t = g - pi (mod 2 pi): B = 2 / (1 + cos(t/2)) = 1 + t^2/16 + O(t^4)
        t = math.remainder(gamma_arg - math.pi, 2.0 * math.pi)
        return 1.0 + t * t / 16.0
    return 2.0 * math.sqrt(2.0) * (math.sqrt(2.0) - math.sqrt(max(0.0, 1.0 - cg))) / (1.0 + cg)


def gamma_parameter(Tx: float, Tp: float, c: float) -> float:
    return Tx * Tp / (2.0 * math.pi * c)


def trip_point_order(gamma: float) -> int | None:
    """n if gamma is within TRIP_POINT_ATOL of 1/n, else None."""
    if gamma > 1.0 + TRIP_POINT_ATOL:
        return None
    n = round(1.0 / gamma)
    if n >= 1 and abs(gamma - 1.0 / n) <= TRIP_POINT_ATOL:
        return int(n)
    return None


def _terms(d: int, inv_gamma: np.longdouble, start: int, stop: int, trip: bool):
    """Mask weights w_N = 1 - cos(2 pi N/d) and B values for N in [start, stop)."""
    N = np.arange(start, stop, dtype=np.int64)
    w = (1.0 - np.cos(2.0 * np.pi * (N % d) / d)) / (N.astype(float) ** 2)
    if trip:
        B = np.full(N.size, 2.0)
    else:
        # B(2 pi N^2 / gamma) = 2 / (1 + |sin(pi N^2 / gamma)|); the phase is reduced
        # mod 2 in extended precision before the sine.
        x = np.mod(N.astype(np.longdouble) ** 2 * inv_gamma, 2.0)
        B = 2.0 / (1.0 + np.abs(np.sin(np.pi * x.astype(float))))
    return w, B


def bound_bracket(
    d: int,
    Tx: float,
    Tp: float,
    c: float,
    target_width: float = 1e-4,
    n_max: int = 1_000_000,
    *,
    n_terms: int | None = None,
    decimals: int = 3,
) -> BoundResult:
    """Bracket Q_d(Tx, Tp).

    Terms are accumulated until ``upper - lower <= target_width``.  With
    ``n_terms`` set, exactly that many terms are summed and no convergence
    check is made.  ``value`` is ``upper`` rounded to ``decimals``.
    """
    if int(d) != d or d < 2:
        raise ParameterError(f"d must be an integer >= 2, got {d!r}")
    d = int(d)
    for name, v in (("Tx", Tx), ("Tp", Tp), ("c", c)):
        if not (math.isfinite(v) and v > 0):
            raise ParameterError(f"{name} must be positive, got {v!r}")
    if n_terms is None and not target_width > 0:
        raise ParameterError("target_width must be positive")
    gamma = gamma_parameter(Tx, Tp, c)
    trip = trip_point_order(gamma) is not None
    inv_gamma = np.longdouble(2.0) * np.longdouble(math.pi) * np.longdouble(c) / (
        np.longdouble(Tx) * np.longdouble(Tp))
    scale = d / math.pi**2
    limit = n_terms if n_terms is not None else n_max

    lower_sum = 0.0  # sum w_N B_N
    upper_sum = 0.0  # sum w_N (2 - B_N)
    n = 0
    lower = 2.0 / d
    upper = 2.0
    while n < limit:
        stop = min(limit, n + max(_BLOCK, n)) + 1
        w, B = _terms(d, inv_gamma, n + 1, stop, trip)
        lower_sum += math.fsum(w * B)
        upper_sum += math.fsum(w * (2.0 - B))
        n = stop - 1
        lower = 2.0 / d + scale * lower_sum
        upper = 2.0 - scale * upper_sum
        if n_terms is None and upper - lower <= target_width:
            break
    upper = min(upper, 2.0)
    lower = min(lower, upper)
    if n_terms is None and upper - lower > target_width:
        raise ConvergenceError(
            f"bracket width {upper - lower:.3g} > {target_width:g} after {n} terms",
            achieved=(lower, upper),
        )
    value = 2.0 if trip else round(upper, decimals)
    return BoundResult(lower=lower, upper=upper, n_terms=n, gamma=gamma, value=value, d=d,
                       trip_point=trip)


def bracket_sequence(d: int, Tx: float, Tp: float, c: float, n_values) -> list[BoundResult]:
    """Brackets at several truncation orders (for convergence studies)."""
    return [bound_bracket(d, Tx, Tp, c, n_terms=int(n)) for n in n_values]
