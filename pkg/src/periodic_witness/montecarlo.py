"""Photon-pair sampling and synthetic coincidence experiments.

This is the sampling oracle for the quadrature code: it shares no integration
routine with ``jointdist``.  Each measurement setting draws from its own
Philox substream keyed by ``(seed, domain, setting)``, so results do not
depend on the order in which settings are simulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlate import CountMatrix
from .errors import ParameterError
from .masks import MaskSpec, mask_index
from .model import SINC_SQ_NORM, DetectionModel, Domain

RNG_NAME = "numpy.random.Philox(SeedSequence([seed, domain, setting]))"
_CHUNK = 1 << 20
_DOMAIN_KEY = {Domain.IP: 0, Domain.FF: 1}

# Rejection sampling of sinc^2(q^2) under a Student-t(3) envelope.


def _t3_pdf(q):
    return 2.0 / (math.pi * math.sqrt(3.0)) * (1.0 + q * q / 3.0) ** -2


def _sinc_target(q):
    q2 = q * q
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(q2 < 1e-8, 1.0, (np.sin(q2) / np.where(q2 == 0, 1.0, q2)) ** 2) / SINC_SQ_NORM


def _envelope_constant() -> float:
    q = np.linspace(0.0, 200.0, 400_001)
    return float(np.max(_sinc_target(q) / _t3_pdf(q))) * 1.02


_ENVELOPE = _envelope_constant()


@dataclass(frozen=True)
class SimConfig:
    pairs_per_setting: int
    seed: int = 0
    efficiency_a: float = 1.0
    efficiency_b: float = 1.0

    def __post_init__(self):
        if int(self.pairs_per_setting) != self.pairs_per_setting or self.pairs_per_setting <= 0:
            raise ParameterError("pairs_per_setting must be a positive integer")
        for name in ("efficiency_a", "efficiency_b"):
            e = getattr(self, name)
            if not 0.0 < e <= 1.0:
                raise ParameterError(f"{name} must lie in (0, 1], got {e!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def _sample_sinc(rng: np.random.Generator, n: int, scale: float) -> np.ndarray:
    out = np.empty(0)
    while out.size < n:
        m = int((n - out.size) * _ENVELOPE * 1.1) + 16
        q = rng.standard_t(3, size=m)
        accept = rng.random(m) * _ENVELOPE * _t3_pdf(q) < _sinc_target(q)
        out = np.concatenate([out, q[accept]])
    return out[:n] * scale


def _draw(model: DetectionModel, domain: Domain, n: int, rng: np.random.Generator):
    sp, sm = model.widths(domain)
    v = rng.normal(0.0, sp, n)
    if model.uses_sinc(domain):
        u = _sample_sinc(rng, n, model.sinc_scale)
    else:
        u = rng.normal(0.0, sm, n)
    return 0.5 * (v + u), 0.5 * (v - u)


def sample_pairs(model: DetectionModel, domain: Domain | str, n: int, seed: int = 0) -> np.ndarray:
    """``n`` i.i.d. pairs ``(xA, xB)`` as an (n, 2) array."""
    domain = Domain.parse(domain)
    if int(n) != n or n <= 0:
        raise ParameterError("n must be a positive integer")
    rng = substream(seed, _DOMAIN_KEY[domain], 0)
    xa, xb = _draw(model, domain, int(n), rng)
    return np.column_stack([xa, xb])


def _count_setting(model, domain, spec_a, k, spec_b, l, sim: SimConfig, rng) -> int:
    total = 0
    remaining = sim.pairs_per_setting
    thin = sim.efficiency_a < 1.0 or sim.efficiency_b < 1.0
    while remaining > 0:
        n = min(remaining, _CHUNK)
        xa, xb = _draw(model, domain, n, rng)
        hit = (mask_index(spec_a, xa) == k) & (mask_index(spec_b, xb) == l)
        if thin:
            hit &= rng.random(n) < sim.efficiency_a
            hit &= rng.random(n) < sim.efficiency_b
        total += int(np.count_nonzero(hit))
        remaining -= n
    return total


def simulate_domain(model: DetectionModel, domain: Domain | str, spec: MaskSpec,
                    sim: SimConfig) -> CountMatrix:
    """Counts for the d x d mask settings of one detection plane."""
    domain = Domain.parse(domain)
    d = spec.d
    counts = np.zeros((d, d), dtype=np.int64)
    for k in range(d):
        for l in range(d):
            rng = substream(sim.seed, _DOMAIN_KEY[domain], k * d + l + 1)
            counts[k, l] = _count_setting(model, domain, spec, k, spec, l, sim, rng)
    meta = {
        "pairs_per_setting": sim.pairs_per_setting,
        "seed": sim.seed,
        "rng": RNG_NAME,
        "efficiency_a": sim.efficiency_a,
        "efficiency_b": sim.efficiency_b,
        "offset_mm": spec.offset,
    }
    return CountMatrix(counts, domain=domain, period=spec.period, metadata=meta)


def simulate_counts(model: DetectionModel, d: int, Tx: float, Tp: float, sim: SimConfig,
                    *, offset_x: float = 0.0, offset_p: float = 0.0):
    """Synthetic acquisition of all 2 d^2 settings. Returns (IP counts, FF counts)."""
    ip = simulate_domain(model, Domain.IP, MaskSpec(d, Tx, offset_x), sim)
    ff = simulate_domain(model, Domain.FF, MaskSpec(d, Tp, offset_p), sim)
    return ip, ff


@dataclass
class DisplacementCurve:
    domain: Domain
    d: int
    period: float
    offsets: np.ndarray
    counts: np.ndarray  # shape (d, steps): mask k on A vs. offset of mask 0 on B
    metadata: dict = field(default_factory=dict)

    def visibility(self, k: int = 0) -> float:
        c = self.counts[k].astype(float)
        hi, lo = c.max(), c.min()
        return float((hi - lo) / (hi + lo)) if hi + lo > 0 else 0.0


def displacement_scan(model: DetectionModel, domain: Domain | str, d: int, T: float, steps: int,
                      sim: SimConfig) -> DisplacementCurve:
    """Coincidences of each mask on A while mask 0 on B slides across one period."""
    domain = Domain.parse(domain)
    if int(steps) != steps or steps < 2:
        raise ParameterError("steps must be an integer >= 2")
    base = MaskSpec(d, T)
    offsets = np.arange(steps) * (T / steps)
    counts = np.zeros((d, steps), dtype=np.int64)
    for k in range(d):
        for j, delta in enumerate(offsets):
            rng = substream(sim.seed, _DOMAIN_KEY[domain], 10_000 + k * steps + j)
            counts[k, j] = _count_setting(model, domain, base, k, base.shifted(delta), 0, sim, rng)
    meta = {"pairs_per_setting": sim.pairs_per_setting, "seed": sim.seed, "rng": RNG_NAME}
    return DisplacementCurve(domain, d, T, offsets, counts, meta)
