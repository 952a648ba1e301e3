"""Plain-text file formats, configuration and histogram rebinning.

Matrices, histograms and scans are CSV files whose leading ``#`` lines carry
metadata as ``key=value``.  Floats are written with 17 significant digits so a
write/read cycle is exact.
"""

from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._version import __version__
from .correlate import CountMatrix
from .errors import ParameterError, ParseError, ResolutionError, UnitError
from .jointdist import JointMatrix
from .masks import MaskSpec, mask_index
from .model import DetectionModel, Domain, OpticalSetup, SourceParams, joint_pdf
from .witness import SCAN_COLUMNS, ScanRow, ScanTable

TOOL = f"periodic_witness {__version__}"

# Config keys: (section, key stem, unit, SourceParams/OpticalSetup field, required)
_CONFIG_FIELDS = (
    ("source", "pump_wavelength", "nm", "pump_wavelength", True),
    ("source", "photon_wavelength", "nm", "photon_wavelength", False),
    ("source", "crystal_length", "mm", "crystal_length", True),
    ("source", "pump_waist", "mm", "pump_waist", True),
    ("optics", "magnification", "", "magnification", True),
    ("optics", "effective_focal_length", "mm", "effective_focal_length", True),
)
_UNIT_SUFFIXES = ("nm", "um", "mm", "cm", "m")
_META_KEY = re.compile(r"^[A-Za-z_][\w.]*$")
_VALUE_WITH_UNIT = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Z]*)\s*$")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


# ---------------------------------------------------------------- config


def _config_value(section: dict, sec: str, stem: str, unit: str, required: bool):
    key = f"{stem}_{unit}" if unit else stem
    field = f"{sec}.{key}"
    if key not in section:
        for other in _UNIT_SUFFIXES:
            if other != unit and f"{stem}_{other}" in section:
                raise UnitError(f"expected unit {unit!r}, got {other!r}", field=f"{sec}.{stem}_{other}")
        if required:
            raise ParseError("missing required field", field=field)
        return None
    raw = section[key]
    if isinstance(raw, str):
        m = _VALUE_WITH_UNIT.match(raw)
        if not m:
            raise ParseError(f"cannot parse {raw!r} as a number", field=field)
        if m.group(2) and m.group(2) != unit:
            raise UnitError(f"expected unit {unit or 'none'!r}, got {m.group(2)!r}", field=field)
        raw = m.group(1)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ParseError(f"cannot parse {raw!r} as a number", field=field) from None
    if not (math.isfinite(value) and value > 0):
        raise ParseError(f"value must be positive, got {value!r}", field=field)
    return value


def parse_config(data: dict) -> tuple[SourceParams, OpticalSetup]:
    if not isinstance(data, dict):
        raise ParseError("config must be a JSON object")
    values: dict[str, dict] = {"source": {}, "optics": {}}
    for sec, stem, unit, attr, required in _CONFIG_FIELDS:
        section = data.get(sec)
        if not isinstance(section, dict):
            raise ParseError("missing section", field=sec)
        v = _config_value(section, sec, stem, unit, required)
        if v is not None:
            values[sec][attr] = v
    return SourceParams(**values["source"]), OpticalSetup(**values["optics"])


def read_config(path) -> tuple[SourceParams, OpticalSetup]:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return parse_config(data)


def write_config(path, source: SourceParams, optics: OpticalSetup) -> None:
    data = {
        "source": {
            "pump_wavelength_nm": source.pump_wavelength,
            "photon_wavelength_nm": source.photon_wavelength,
            "crystal_length_mm": source.crystal_length,
            "pump_waist_mm": source.pump_waist,
        },
        "optics": {
            "magnification": optics.magnification,
            "effective_focal_length_mm": optics.effective_focal_length,
        },
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def model_metadata(model: DetectionModel) -> dict:
    """Model provenance for file headers."""
    meta = {
        "alpha_mm2": model.alpha,
        "c_mm2": model.c,
        "sigma_minus_ip_mm": model.sigma_minus_ip,
        "sigma_plus_ip_mm": model.sigma_plus_ip,
        "sigma_plus_ff_mm": model.sigma_plus_ff,
        "sigma_minus_ff_mm": model.sigma_minus_ff,
        "magnification": model.magnification,
        "sinc_approx": model.sinc_approx.value,
    }
    if model.source is not None:
        meta.update(pump_wavelength_nm=model.source.pump_wavelength,
                    photon_wavelength_nm=model.source.photon_wavelength,
                    crystal_length_mm=model.source.crystal_length,
                    pump_waist_mm=model.source.pump_waist)
    if model.optics is not None:
        meta["effective_focal_length_mm"] = model.optics.effective_focal_length
    return meta


# ---------------------------------------------------------------- CSV plumbing


def _header_lines(meta: dict) -> list[str]:
    return [f"# {k}={fmt(v)}" for k, v in meta.items() if v is not None]


def _write_text(path, lines: list[str]) -> None:
    if str(path) == "-":
        sys.stdout.write("\n".join(lines) + "\n")
        return
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _split(path) -> tuple[dict, list[tuple[int, str]], list[tuple[int, str]]]:
    """Metadata dict, other comment lines and data lines (with 1-based line numbers)."""
    meta: dict[str, str] = {}
    comments, data = [], []
    with open(path, newline="") as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                k, sep, v = body.partition("=")
                if sep and _META_KEY.match(k.strip()):
                    meta[k.strip()] = v.strip()
                else:
                    comments.append((no, body))
            else:
                data.append((no, line))
    return meta, comments, data


def _need(meta: dict, key: str, conv=str):
    if key not in meta:
        raise ParseError("missing metadata", field=key)
    try:
        return conv(meta[key])
    except ValueError:
        raise ParseError(f"bad value {meta[key]!r}", field=key) from None


def _opt_float(meta: dict, key: str):
    return None if key not in meta or meta[key] in ("", "None") else _need(meta, key, float)


def _numeric_rows(data, width: int | None, conv=float) -> np.ndarray:
    rows = []
    for no, line in data:
        parts = line.split(",")
        if width is not None and len(parts) != width:
            raise ParseError(f"expected {width} values, got {len(parts)}", line=no)
        try:
            rows.append([conv(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"not a number: {exc}", line=no) from None
    return np.array(rows)


def _matrix_lines(arr: np.ndarray) -> list[str]:
    return [",".join(fmt(x) for x in row) for row in arr]


# ---------------------------------------------------------------- JointMatrix


def write_joint_matrix(path, J: JointMatrix, extra: dict | None = None) -> None:
    meta = {
        "kind": "JointMatrix",
        "domain": J.domain.value,
        "d": J.d,
        "T_mm": J.period,
        "offset_mm": J.offset,
        "T_b_mm": J.period_b,
        "offset_b_mm": J.offset_b,
        "tol": J.quad_tolerance,
        "captured_mass": J.captured_mass,
        "tool": TOOL,
    }
    meta.update(extra or {})
    _write_text(path, _header_lines(meta) + _matrix_lines(J.entries))


def read_joint_matrix(path) -> JointMatrix:
    meta, _, data = _split(path)
    d = _need(meta, "d", int)
    entries = _numeric_rows(data, d)
    if entries.shape != (d, d):
        raise ParseError(f"expected {d} rows, got {len(entries)}")
    return JointMatrix(
        d=d,
        domain=Domain.parse(_need(meta, "domain")),
        entries=entries,
        captured_mass=_need(meta, "captured_mass", float) if "captured_mass" in meta else float("nan"),
        quad_tolerance=_opt_float(meta, "tol") or 0.0,
        period=_opt_float(meta, "T_mm"),
        offset=_opt_float(meta, "offset_mm") or 0.0,
        period_b=_opt_float(meta, "T_b_mm"),
        offset_b=_opt_float(meta, "offset_b_mm"),
    )


# ---------------------------------------------------------------- CountMatrix


def write_count_matrix(path, N: CountMatrix, extra: dict | None = None) -> None:
    meta = {
        "kind": "CountMatrix",
        "domain": N.domain.value if N.domain is not None else None,
        "d": N.d,
        "T_mm": N.period,
        "dwell_time_s": N.dwell_time,
        "tool": TOOL,
    }
    meta.update(N.metadata)
    meta.update(extra or {})
    _write_text(path, _header_lines(meta) + _matrix_lines(N.counts))


def read_count_matrix(path) -> CountMatrix:
    meta, _, data = _split(path)
    if not data:
        raise ParseError("no count rows")
    d = _need(meta, "d", int) if "d" in meta else len(data)
    counts = _numeric_rows(data, d, int)
    if counts.shape != (d, d):
        raise ParseError(f"expected {d} rows, got {len(counts)}")
    reserved = {"kind", "domain", "d", "T_mm", "dwell_time_s", "tool"}
    try:
        return CountMatrix(
            counts,
            domain=meta.get("domain"),
            period=_opt_float(meta, "T_mm"),
            dwell_time=_opt_float(meta, "dwell_time_s"),
            metadata={k: v for k, v in meta.items() if k not in reserved},
        )
    except ParameterError as exc:
        raise ParseError(str(exc)) from None


# ---------------------------------------------------------------- FineHistogram

HIST_HEADER = "xminA,xmaxA,xminB,xmaxB,nbins"


@dataclass
class FineHistogram:
    """Joint histogram on a uniform grid. ``values[i, j]``: bin i of arm A, bin j of arm B."""

    xmin_a: float
    xmax_a: float
    xmin_b: float
    xmax_b: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ParameterError(f"histogram must be n x n, got {self.values.shape}")
        if self.values.shape[0] < 2:
            raise ParameterError("histogram needs at least 2 bins per axis")
        for lo, hi in ((self.xmin_a, self.xmax_a), (self.xmin_b, self.xmax_b)):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ParameterError(f"invalid axis range [{lo}, {hi}]")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ParameterError("histogram values must be finite and non-negative")

    @property
    def nbins(self) -> int:
        return self.values.shape[0]

    @property
    def bin_width_a(self) -> float:
        return (self.xmax_a - self.xmin_a) / self.nbins

    @property
    def bin_width_b(self) -> float:
        return (self.xmax_b - self.xmin_b) / self.nbins

    def centers_a(self) -> np.ndarray:
        return self.xmin_a + (np.arange(self.nbins) + 0.5) * self.bin_width_a

    def centers_b(self) -> np.ndarray:
        return self.xmin_b + (np.arange(self.nbins) + 0.5) * self.bin_width_b

    def shifted(self, da: float = 0.0, db: float = 0.0) -> "FineHistogram":
        return FineHistogram(self.xmin_a + da, self.xmax_a + da, self.xmin_b + db,
                             self.xmax_b + db, self.values)


def write_histogram(path, H: FineHistogram, extra: dict | None = None) -> None:
    ranges = ",".join(fmt(x) for x in (H.xmin_a, H.xmax_a, H.xmin_b, H.xmax_b)) + f",{H.nbins}"
    lines = [f"# {HIST_HEADER}", f"# {ranges}"]
    lines += _header_lines({"kind": "FineHistogram", "tool": TOOL, **(extra or {})})
    lines += _matrix_lines(H.values)
    _write_text(path, lines)


def read_histogram(path) -> FineHistogram:
    _, comments, data = _split(path)
    for i, (no, body) in enumerate(comments):
        if body.replace(" ", "") == HIST_HEADER:
            if i + 1 >= len(comments):
                raise ParseError("histogram range line missing", line=no + 1)
            rno, rline = comments[i + 1]
            parts = rline.split(",")
            if len(parts) != 5:
                raise ParseError(f"expected 5 fields, got {len(parts)}", line=rno)
            try:
                xa0, xa1, xb0, xb1 = (float(p) for p in parts[:4])
                n = int(parts[4])
            except ValueError as exc:
                raise ParseError(f"bad range value: {exc}", line=rno) from None
            break
    else:
        raise ParseError("missing header", field=HIST_HEADER)
    values = _numeric_rows(data, n)
    if values.shape != (n, n):
        raise ParseError(f"expected {n} rows, got {len(values)}")
    try:
        return FineHistogram(xa0, xa1, xb0, xb1, values)
    except ParameterError as exc:
        raise ParseError(str(exc)) from None


def rebin_histogram(H: FineHistogram, spec: MaskSpec, spec_b: MaskSpec | None = None,
                    domain: Domain | str = Domain.IP) -> JointMatrix:
    """Coarse-grain a fine histogram into d x d mask bins by bin-centre assignment.

    The result is normalised by the histogram total; ``captured_mass`` is that
    total (the probability captured by the grid when ``H`` holds masses).
    """
    spec_b = spec_b or spec
    if spec.d != spec_b.d:
        raise ParameterError("both arms must use the same mask dimension")
    for w, s, arm in ((H.bin_width_a, spec.slit_width, "A"), (H.bin_width_b, spec_b.slit_width, "B")):
        if w > s / 4.0 * (1.0 + 1e-12):
            raise ResolutionError(
                f"arm {arm}: bin width {w:.4g} mm exceeds a quarter slit ({s / 4:.4g} mm)")
    d = spec.d
    ka = mask_index(spec, H.centers_a())
    kb = mask_index(spec_b, H.centers_b())
    A = np.zeros((d, H.nbins))
    A[ka, np.arange(H.nbins)] = 1.0
    Bm = np.zeros((d, H.nbins))
    Bm[kb, np.arange(H.nbins)] = 1.0
    coarse = A @ H.values @ Bm.T
    total = float(H.values.sum())
    if total <= 0:
        raise ParameterError("histogram has no mass")
    return JointMatrix(d=d, domain=Domain.parse(domain), entries=coarse / total,
                       captured_mass=total, period=spec.period, offset=spec.offset,
                       period_b=spec_b.period, offset_b=spec_b.offset)


def aligned_range(spec: MaskSpec, nbins: int, bins_per_slit: int) -> tuple[float, float]:
    """Symmetric-ish axis range whose bin edges fall on the slit boundaries of ``spec``."""
    if nbins % 2 or bins_per_slit < 1:
        raise ParameterError("nbins must be even and bins_per_slit positive")
    w = spec.slit_width / bins_per_slit
    half = nbins // 2
    # nearest slit edge to 0, then half the grid on each side
    centre = spec.offset + round(-spec.offset / spec.slit_width) * spec.slit_width
    return centre - half * w, centre + half * w


def tabulate_density(model: DetectionModel, domain: Domain | str, xmin: float, xmax: float,
                     nbins: int, subsamples: int = 4, xmin_b: float | None = None,
                     xmax_b: float | None = None) -> FineHistogram:
    """Bin masses of the joint density by a ``subsamples``^2 midpoint rule per bin."""
    xmin_b = xmin if xmin_b is None else xmin_b
    xmax_b = xmax if xmax_b is None else xmax_b
    wa = (xmax - xmin) / nbins
    wb = (xmax_b - xmin_b) / nbins
    m = subsamples
    fa = xmin + (np.arange(nbins * m) + 0.5) * (wa / m)
    fb = xmin_b + (np.arange(nbins * m) + 0.5) * (wb / m)
    out = np.empty((nbins, nbins))
    cell = (wa / m) * (wb / m)
    rows = max(1, 2**22 // (nbins * m * m))
    for i0 in range(0, nbins, rows):
        i1 = min(nbins, i0 + rows)
        xa = fa[i0 * m:i1 * m, None]
        p = joint_pdf(model, domain, xa, fb[None, :])
        out[i0:i1] = p.reshape(i1 - i0, m, nbins, m).sum(axis=(1, 3)) * cell
    return FineHistogram(xmin, xmax, xmin_b, xmax_b, out)


# ---------------------------------------------------------------- ScanTable


def write_scan(path, table: ScanTable, model: DetectionModel | None = None,
               extra: dict | None = None) -> None:
    """Columns are exactly ``SCAN_COLUMNS``; failed points have nan values and an ``# error:`` line."""
    meta = {"kind": "ScanTable", "tool": TOOL}
    if model is not None:
        meta.update(model_metadata(model))
    meta.update(table.metadata)
    meta.update(extra or {})
    lines = _header_lines(meta)
    lines += [f"# error: {i}: {r.error}" for i, r in enumerate(table.rows) if r.error is not None]
    lines.append(",".join(SCAN_COLUMNS))
    lines += [",".join(fmt(v) for v in r.as_tuple()) for r in table.rows]
    _write_text(path, lines)


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1"):
        return True
    if s.lower() in ("false", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_ERROR_LINE = re.compile(r"^error:\s*(\d+):\s*(.*)$")


def read_scan(path) -> ScanTable:
    meta, comments, data = _split(path)
    if not data:
        raise ParseError("missing column header")
    hno, header = data[0]
    if tuple(header.split(",")) != SCAN_COLUMNS:
        raise ParseError(f"unexpected columns {header!r}", line=hno)
    errors = {}
    for _, body in comments:
        m = _ERROR_LINE.match(body)
        if m:
            errors[int(m.group(1))] = m.group(2)
    convs = (int, float, float, float, float, float, float, float, _parse_bool)
    rows = []
    for i, (no, line) in enumerate(data[1:]):
        parts = line.split(",")
        if len(parts) != len(SCAN_COLUMNS):
            raise ParseError(f"expected {len(SCAN_COLUMNS)} fields, got {len(parts)}", line=no)
        vals = []
        for conv, name, p in zip(convs, SCAN_COLUMNS, parts):
            try:
                vals.append(conv(p))
            except ValueError:
                raise ParseError(f"bad value {p!r}", line=no, field=name) from None
        rows.append(ScanRow(*vals, error=errors.get(i)))
    return ScanTable(rows=rows, metadata=meta)
