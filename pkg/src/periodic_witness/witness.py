"""End-to-end witness evaluation and parameter scans."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .bound import BoundResult, bound_bracket
from .correlate import WitnessStatistics, witness_value
from .errors import ParameterError, WitnessError
from .jointdist import JointMatrix, mask_joint_matrix
from .masks import MaskSpec
from .model import DetectionModel, Domain

SCAN_COLUMNS = ("d", "Tx_mm", "Tp_mm", "C_xx", "C_pp", "I_d", "Q_d", "margin", "detected")

DEFAULT_D_LIST = (2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 20)


def default_periods() -> np.ndarray:
    """0.24 mm to 8.64 mm in 0.24 mm steps (36 values)."""
    return np.round(0.24 * np.arange(1, 37), 10)


@dataclass(frozen=True)
class WitnessResult:
    stats: WitnessStatistics
    bound: BoundResult
    margin: float
    detected: bool
    significance: float | None = None
    matrices: tuple[JointMatrix, JointMatrix] | None = field(default=None, compare=False)


def compare(stats: WitnessStatistics, bound: BoundResult) -> WitnessResult:
    margin = stats.I_d - bound.value
    significance = None
    if stats.sigma_I is not None and stats.sigma_I > 0:
        significance = margin / stats.sigma_I
    return WitnessResult(stats=stats, bound=bound, margin=margin, detected=margin > 0,
                         significance=significance)


def evaluate_witness(
    model: DetectionModel,
    d: int,
    Tx: float,
    Tp: float,
    tol: float = 1e-6,
    *,
    offset_x: float = 0.0,
    offset_p: float = 0.0,
    bound_terms: int | None = None,
    support_sigmas: float = 6.0,
    kernel: str | None = None,
) -> WitnessResult:
    """Model-based I_d against Q_d at one (d, Tx, Tp)."""
    spec_x = MaskSpec(d, Tx, offset_x)
    spec_p = MaskSpec(d, Tp, offset_p)
    J_xx = mask_joint_matrix(model, Domain.IP, spec_x, tol=tol, support_sigmas=support_sigmas,
                             kernel=kernel)
    J_pp = mask_joint_matrix(model, Domain.FF, spec_p, tol=tol, support_sigmas=support_sigmas,
                             kernel=kernel)
    stats = witness_value(J_xx, J_pp)
    bound = bound_bracket(d, Tx, Tp, model.c, n_terms=bound_terms)
    res = compare(stats, bound)
    return WitnessResult(stats=res.stats, bound=res.bound, margin=res.margin,
                         detected=res.detected, matrices=(J_xx, J_pp))


@dataclass
class ScanRow:
    d: int
    Tx_mm: float
    Tp_mm: float
    C_xx: float
    C_pp: float
    I_d: float
    Q_d: float
    margin: float
    detected: bool
    error: str | None = None

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in SCAN_COLUMNS)


@dataclass
class ScanTable:
    rows: list[ScanRow]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def errors(self) -> list[ScanRow]:
        return [r for r in self.rows if r.error is not None]


def _predictability(model, domain, d, T, tol, offset, support_sigmas, kernel):
    J = mask_joint_matrix(model, domain, MaskSpec(d, T, offset), tol=tol,
                          support_sigmas=support_sigmas, kernel=kernel)
    stats = witness_value(J, J)
    return stats.C_xx if domain is Domain.IP else stats.C_pp


def _scan_one_d(args):
    """All (Tx, Tp) points for one d. Predictabilities are computed once per period."""
    model, d, pairs, tol, offsets, support_sigmas, kernel, bound_terms = args
    tx_list = sorted({p[0] for p in pairs})
    tp_list = sorted({p[1] for p in pairs})
    cx: dict[float, float | str] = {}
    cp: dict[float, float | str] = {}
    for T in tx_list:
        try:
            cx[T] = _predictability(model, Domain.IP, d, T, tol, offsets[0], support_sigmas, kernel)
        except WitnessError as exc:
            cx[T] = f"{type(exc).__name__}: {exc}"
    for T in tp_list:
        try:
            cp[T] = _predictability(model, Domain.FF, d, T, tol, offsets[1], support_sigmas, kernel)
        except WitnessError as exc:
            cp[T] = f"{type(exc).__name__}: {exc}"
    rows = []
    for tx, tp in pairs:
        err = None
        nan = float("nan")
        cxx, cpp, q = nan, nan, nan
        if isinstance(cx[tx], str):
            err = cx[tx]
        elif isinstance(cp[tp], str):
            err = cp[tp]
        else:
            cxx, cpp = cx[tx], cp[tp]
        if err is None:
            try:
                q = bound_bracket(d, tx, tp, model.c, n_terms=bound_terms).value
            except WitnessError as exc:
                err = f"{type(exc).__name__}: {exc}"
        if err is None:
            I = cxx + cpp
            rows.append(ScanRow(d, tx, tp, cxx, cpp, I, q, I - q, bool(I - q > 0)))
        else:
            rows.append(ScanRow(d, tx, tp, nan, nan, nan, nan, nan, False, error=err))
    return rows


def scan_grid(
    model: DetectionModel,
    d_list,
    Tx_list,
    Tp_list=None,
    tol: float = 1e-6,
    *,
    equal_periods: bool = False,
    offsets: tuple[float, float] = (0.0, 0.0),
    support_sigmas: float = 6.0,
    kernel: str | None = None,
    bound_terms: int | None = None,
    workers: int = 1,
) -> ScanTable:
    """Evaluate the witness over a grid; rows are in (d, Tx, Tp) order.

    With ``equal_periods`` only the diagonal ``Tx == Tp`` is evaluated and
    ``Tp_list`` is ignored.
    """
    d_list = sorted({int(d) for d in d_list})
    tx_list = sorted({float(t) for t in Tx_list})
    tp_list = tx_list if (equal_periods or Tp_list is None) else sorted({float(t) for t in Tp_list})
    if not d_list or not tx_list or not tp_list:
        raise ParameterError("scan lists must be non-empty")
    if equal_periods:
        pairs = [(t, t) for t in tx_list]
    else:
        pairs = list(product(tx_list, tp_list))
    jobs = [(model, d, pairs, tol, offsets, support_sigmas, kernel, bound_terms) for d in d_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_d = list(pool.map(_scan_one_d, jobs))
    else:
        per_d = [_scan_one_d(job) for job in jobs]
    rows = [r for block in per_d for r in block]
    meta = {
        "d_list": ",".join(map(str, d_list)),
        "tx_mm": ",".join(repr(t) for t in tx_list),
        "tp_mm": ",".join(repr(t) for t in tp_list),
        "equal_periods": equal_periods,
        "tol": tol,
        "support_sigmas": support_sigmas,
        "offset_x_mm": offsets[0],
        "offset_p_mm": offsets[1],
        "bound_terms": "adaptive" if bound_terms is None else bound_terms,
    }
    return ScanTable(rows=rows, metadata=meta)


def source_slit_product(model: DetectionModel, d: int, Tx: float, Tp: float) -> float:
    """s'_x s'_p: slit widths mapped back to source position and momentum."""
    return (Tx / (model.magnification * d)) * (Tp / (model.alpha * d))


def detection_onset(table: ScanTable, d: int) -> float | None:
    """Smallest equal period T (Tx == Tp) at which detection occurs for ``d``."""
    ts = [r.Tx_mm for r in table.rows if r.d == d and r.Tx_mm == r.Tp_mm and r.detected]
    return min(ts) if ts else None


def best_row(table: ScanTable) -> ScanRow:
    rows = [r for r in table.rows if r.error is None and math.isfinite(r.margin)]
    if not rows:
        raise ParameterError("scan has no valid rows")
    return max(rows, key=lambda r: r.margin)
