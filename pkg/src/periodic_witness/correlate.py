"""Mutual predictabilities, the witness sum and Poissonian error propagation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ParameterError, UndefinedStatisticsError
from .model import Domain

EXHAUSTIVE_MAX_D = 8


class Permutation(tuple):
    """Bijection g: k -> g[k] on {0, ..., d-1}."""

    def __new__(cls, mapping):
        values = tuple(int(x) for x in mapping)
        if sorted(values) != list(range(len(values))):
            raise ParameterError(f"not a permutation: {values}")
        return super().__new__(cls, values)

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(range(d))

    @classmethod
    def reflection(cls, d: int) -> "Permutation":
        return cls(range(d - 1, -1, -1))

    @property
    def d(self) -> int:
        return len(self)

    def inverse(self) -> "Permutation":
        inv = [0] * len(self)
        for k, g in enumerate(self):
            inv[g] = k
        return Permutation(inv)


@dataclass
class CountMatrix:
    counts: np.ndarray
    domain: Domain | None = None
    period: float | None = None
    dwell_time: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ParameterError(f"count matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr != np.round(arr)):
            raise ParameterError("counts must be non-negative integers")
        self.counts = arr.astype(np.int64)
        if self.domain is not None:
            self.domain = Domain.parse(self.domain)

    @property
    def d(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        if self.total == 0:
            raise UndefinedStatisticsError("count matrix is empty")
        return self.counts / self.total


@dataclass(frozen=True)
class WitnessStatistics:
    C_xx: float
    C_pp: float
    I_d: float
    sigma_I: float | None = None
    sigma_xx: float | None = None
    sigma_pp: float | None = None


def _as_probabilities(J) -> np.ndarray:
    if isinstance(J, CountMatrix):
        return J.normalized()
    entries = getattr(J, "entries", J)
    P = np.asarray(entries, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ParameterError(f"joint matrix must be square, got shape {P.shape}")
    return P


def _check_perm(g, d: int) -> Permutation:
    g = g if isinstance(g, Permutation) else Permutation(g)
    if g.d != d:
        raise ParameterError(f"permutation has size {g.d}, matrix has d={d}")
    return g


def mutual_predictability(J, g) -> float:
    """Sum of J(k, g(k)). CountMatrix inputs are normalised first."""
    P = _as_probabilities(J)
    g = _check_perm(g, P.shape[0])
    return float(P[np.arange(P.shape[0]), list(g)].sum())


def _exhaustive_best(P: np.ndarray) -> Permutation:
    d = P.shape[0]
    perms = np.array(list(itertools.permutations(range(d))), dtype=np.intp)
    scores = P[np.arange(d), perms].sum(axis=1)
    best = scores.max()
    # permutations() yields lexicographic order, so the first near-tie wins
    i = int(np.flatnonzero(scores >= best - 1e-12 * max(1.0, abs(best)))[0])
    return Permutation(perms[i])


def _lexicographic_assignment(P: np.ndarray) -> Permutation:
    """Optimal assignment, ties broken toward the lexicographically smallest g."""
    d = P.shape[0]
    rows, cols = linear_sum_assignment(P, maximize=True)
    best = P[rows, cols].sum()
    eps = 1e-12 * max(1.0, abs(best))
    chosen: list[int] = []
    free = list(range(d))
    fixed = 0.0
    for k in range(d):
        for col in free:
            rest_rows = list(range(k + 1, d))
            rest_cols = [c for c in free if c != col]
            if rest_rows:
                sub = P[np.ix_(rest_rows, rest_cols)]
                r, c = linear_sum_assignment(sub, maximize=True)
                rest = sub[r, c].sum()
            else:
                rest = 0.0
            if fixed + P[k, col] + rest >= best - eps:
                chosen.append(col)
                free.remove(col)
                fixed += P[k, col]
                break
    return Permutation(chosen)


def best_permutation(J) -> Permutation:
    """Permutation maximising the mutual predictability."""
    P = _as_probabilities(J)
    if P.shape[0] <= EXHAUSTIVE_MAX_D:
        return _exhaustive_best(P)
    return _lexicographic_assignment(P)


def witness_value(J_xx, J_pp, g_x=None, g_p=None) -> WitnessStatistics:
    """C_xx + C_pp with the physics-fixed permutations unless given."""
    Pxx = _as_probabilities(J_xx)
    Ppp = _as_probabilities(J_pp)
    if Pxx.shape != Ppp.shape:
        raise ParameterError(f"dimension mismatch: {Pxx.shape} vs {Ppp.shape}")
    d = Pxx.shape[0]
    g_x = Permutation.identity(d) if g_x is None else g_x
    g_p = Permutation.reflection(d) if g_p is None else g_p
    cxx = mutual_predictability(Pxx, g_x)
    cpp = mutual_predictability(Ppp, g_p)
    return WitnessStatistics(C_xx=cxx, C_pp=cpp, I_d=cxx + cpp)


def _paired_total(N: np.ndarray, g: Permutation) -> tuple[float, float]:
    d = N.shape[0]
    S = float(N[np.arange(d), list(g)].sum())
    T = float(N.sum())
    return S, T


def predictability_error(N, g) -> tuple[float, float]:
    """C = S/T and its first-order Poisson standard error sqrt(S (T-S) / T^3)."""
    N = N.counts if isinstance(N, CountMatrix) else np.asarray(N)
    g = _check_perm(g, N.shape[0])
    S, T = _paired_total(N, g)
    if T <= 0:
        raise UndefinedStatisticsError("zero total counts: predictability error is undefined")
    return S / T, math.sqrt(S * (T - S) / T**3)


def poisson_errors(N_xx, N_pp, g_x=None, g_p=None) -> WitnessStatistics:
    """Witness statistics from count matrices with propagated Poisson errors."""
    Nxx = N_xx.counts if isinstance(N_xx, CountMatrix) else np.asarray(N_xx)
    Npp = N_pp.counts if isinstance(N_pp, CountMatrix) else np.asarray(N_pp)
    if Nxx.shape != Npp.shape:
        raise ParameterError(f"dimension mismatch: {Nxx.shape} vs {Npp.shape}")
    d = Nxx.shape[0]
    g_x = Permutation.identity(d) if g_x is None else g_x
    g_p = Permutation.reflection(d) if g_p is None else g_p
    cxx, sxx = predictability_error(Nxx, g_x)
    cpp, spp = predictability_error(Npp, g_p)
    return WitnessStatistics(
        C_xx=cxx, C_pp=cpp, I_d=cxx + cpp,
        sigma_I=math.hypot(sxx, spp), sigma_xx=sxx, sigma_pp=spp,
    )


def bootstrap_errors(N_xx, N_pp, g_x=None, g_p=None, replicas: int = 10_000,
                     seed: int = 0) -> WitnessStatistics:
    """Parametric Poisson bootstrap of the same statistics (validation mode)."""
    Nxx = np.asarray(getattr(N_xx, "counts", N_xx), dtype=float)
    Npp = np.asarray(getattr(N_pp, "counts", N_pp), dtype=float)
    d = Nxx.shape[0]
    g_x = _check_perm(Permutation.identity(d) if g_x is None else g_x, d)
    g_p = _check_perm(Permutation.reflection(d) if g_p is None else g_p, d)
    rng = np.random.default_rng(seed)

    def resample(N, g):
        draws = rng.poisson(N, size=(replicas,) + N.shape)
        S = draws[:, np.arange(d), list(g)].sum(axis=1)
        T = draws.sum(axis=(1, 2))
        ok = T > 0
        return S[ok] / T[ok]

    cx = resample(Nxx, g_x)
    cp = resample(Npp, g_p)
    base = poisson_errors(Nxx.astype(np.int64), Npp.astype(np.int64), g_x, g_p)
    sxx, spp = float(cx.std(ddof=1)), float(cp.std(ddof=1))
    return WitnessStatistics(
        C_xx=base.C_xx, C_pp=base.C_pp, I_d=base.I_d,
        sigma_I=math.hypot(sxx, spp), sigma_xx=sxx, sigma_pp=spp,
    )
