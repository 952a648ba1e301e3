"""Acceptance checks, one per criterion.

Each check returns ``(passed, detail)``.  Under pytest the outcome of every
criterion is collected and printed as a PASS/FAIL line in the terminal
summary; running this file directly prints the same lines.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from periodic_witness import io
from periodic_witness.bound import bound_bracket, bracket_sequence
from periodic_witness.cli import TABLE1
from periodic_witness.correlate import witness_value
from periodic_witness.jointdist import mask_joint_matrix
from periodic_witness.masks import MaskSpec
from periodic_witness.model import build_detection_model, separable_model
from periodic_witness.montecarlo import SimConfig, simulate_domain
from periodic_witness.witness import (
    DEFAULT_D_LIST, best_row, default_periods, detection_onset, evaluate_witness, scan_grid,
    source_slit_product,
)

RESULTS: dict[int, tuple[bool, str]] = {}

MODEL = build_detection_model()


def check_1():
    t0 = time.perf_counter()
    diffs = [bound_bracket(d, tx, tp, MODEL.c).value - q for d, tx, tp, _, _, q in TABLE1]
    elapsed = time.perf_counter() - t0
    worst = max(abs(x) for x in diffs)
    ok = worst <= 0.002 + 1e-12 and elapsed < 5.0
    return ok, f"11 rows, max |Q - Q_ref| = {worst:.4f} (limit 0.002), {elapsed:.2f} s (limit 5 s)"


def check_2():
    worst = 0.0
    for n in range(1, 11):
        T = math.sqrt(2 * math.pi * MODEL.c / n)
        for d in range(2, 21):
            worst = max(worst, abs(bound_bracket(d, T, T, MODEL.c).upper - 2.0))
    return worst <= 1e-9, f"n = 1..10, d = 2..20: max |Q - 2| = {worst:.2e} (limit 1e-9)"


def check_3():
    rng = np.random.default_rng(20240601)
    widths, monotone = [], True
    for _ in range(100):
        d = int(rng.integers(2, 21))
        tx, tp = (float(x) for x in rng.uniform(0.24, 8.64, 2))
        seq = bracket_sequence(d, tx, tp, MODEL.c, [100, 500, 1000, 2000, 5000])
        lo = [r.lower for r in seq]
        hi = [r.upper for r in seq]
        monotone &= lo == sorted(lo) and hi == sorted(hi, reverse=True)
        widths.append((seq[-1].width, d))
    w_max, d_max = max(widths)
    n_bad = sum(w > 2e-4 for w, _ in widths)
    ok = monotone and n_bad == 0
    return ok, (f"N0 = 5000: max width {w_max:.2e} at d = {d_max}, {n_bad}/100 points above 2e-4; "
                f"monotone in N0: {monotone}")


def check_4():
    ip, ff = round(MODEL.sigma_minus_ip, 3), round(MODEL.sigma_plus_ff, 3)
    return (ip, ff) == (0.068, 0.037), f"sigma_IP = {MODEL.sigma_minus_ip:.5f}, sigma_FF = {MODEL.sigma_plus_ff:.5f}"


def _predictability(domain, d, T):
    J = mask_joint_matrix(MODEL, domain, MaskSpec(d, T))
    s = witness_value(J, J)
    return s.C_xx if domain == "IP" else s.C_pp


def check_5():
    small_dev, large_min, where = 0.0, 1.0, None
    for d in (2, 3, 4, 6):
        for domain, width in (("IP", MODEL.sigma_minus_ip), ("FF", MODEL.sigma_plus_ff)):
            small_dev = max(small_dev, abs(_predictability(domain, d, 0.024) - 1 / d))
            c = _predictability(domain, d, 20 * width)
            if c < large_min:
                large_min, where = c, (domain, d)
    ok = small_dev <= 1e-3 and large_min >= 0.99
    return ok, (f"T = 0.024 mm: max |C - 1/d| = {small_dev:.1e} (limit 1e-3); "
                f"T = 20 widths: min C = {large_min:.4f} at {where[0]} d = {where[1]} (limit 0.99)")


def check_6():
    t0 = time.perf_counter()
    table = scan_grid(MODEL, DEFAULT_D_LIST, default_periods(), equal_periods=True)
    elapsed = time.perf_counter() - t0
    onsets = [detection_onset(table, d) for d in DEFAULT_D_LIST]
    nondecreasing = None not in onsets and onsets == sorted(onsets)
    best = best_row(table)
    sxsp = source_slit_product(MODEL, best.d, best.Tx_mm, best.Tp_mm)
    s = best.Tx_mm / best.d
    ok = nondecreasing and 3 <= sxsp <= 8 and 0.6 <= s <= 1.3 and elapsed < 600
    return ok, (f"onsets {onsets} non-decreasing: {nondecreasing}; max margin {best.margin:.3f} at "
                f"d = {best.d}, T = {best.Tx_mm} mm: s'x s'p = {sxsp:.2f} (want 3..8), "
                f"s = {s:.3f} mm (want 0.6..1.3); {elapsed:.1f} s")


def check_7():
    rng = np.random.default_rng(7)
    T = default_periods()[::2]
    worst = -math.inf
    for _ in range(20):
        sigma = float(np.exp(rng.uniform(math.log(0.03), math.log(5.0))))
        excess = float(np.exp(rng.uniform(0.0, math.log(3.0))))
        m = separable_model(sigma, MODEL.c, excess=excess)
        table = scan_grid(m, [2, 3, 4, 6, 9], T, T)
        if table.errors():
            return False, f"{len(table.errors())} grid points failed to evaluate"
        worst = max(worst, float(np.max(table.column("margin"))))
    return worst <= 0, f"20 product-Gaussian models x 1620 grid points: max margin {worst:+.4f}"


def check_8():
    rng = np.random.default_rng(88)
    n = 1_000_000
    worst_z = 0.0
    for domain in ("IP", "FF"):
        for _ in range(10):
            d = int(rng.integers(2, 7))
            T = float(rng.uniform(0.24, 8.64))
            spec = MaskSpec(d, T)
            N = simulate_domain(MODEL, domain, spec, SimConfig(n, seed=int(rng.integers(2**32))))
            P = mask_joint_matrix(MODEL, domain, spec).entries
            pos = P > 0
            if np.any(N.counts[~pos]):
                return False, f"counts in a zero-probability cell ({domain}, d = {d}, T = {T:.3f})"
            se = np.sqrt(P[pos] * (1 - P[pos]) / n)
            worst_z = max(worst_z, float(np.max(np.abs(N.counts[pos] / n - P[pos]) / se)))
    rebin_dev = 0.0
    for domain, d, T in (("IP", 4, 3.36), ("FF", 3, 1.2)):
        spec = MaskSpec(d, T)
        per_slit = max(4, int(spec.slit_width / (12 * MODEL.marginal_sigma(domain) / 2048)))
        lo, hi = io.aligned_range(spec, 2048, per_slit)
        H = io.tabulate_density(MODEL, domain, lo, hi, 2048)
        J = io.rebin_histogram(H, spec, domain=domain)
        Q = mask_joint_matrix(MODEL, domain, spec, tol=1e-9)
        rebin_dev = max(rebin_dev, float(np.max(np.abs(J.entries - Q.normalized()))))
    ok = worst_z < 4 and rebin_dev <= 1e-4
    return ok, (f"20 random points at 1e6 pairs/setting: max |z| = {worst_z:.2f} (limit 4); "
                f"2048^2 rebin max deviation {rebin_dev:.1e} (limit 1e-4)")


def check_9():
    lines, ok = [], True
    for d, tx, tp, i_ref, err, _ in TABLE1:
        if d > 9:
            continue
        r = evaluate_witness(MODEL, d, tx, tp)
        if d <= 6 and r.stats.I_d < i_ref - err:
            ok = False
        ok &= r.detected
        lines.append(f"d={d}: I={r.stats.I_d:.3f}")
    return ok, "model I_d >= measured - 1 err for d <= 6, detected for d <= 9: " + ", ".join(lines)


CHECKS = {i: globals()[f"check_{i}"] for i in range(1, 10)}


@pytest.mark.acceptance
@pytest.mark.parametrize("criterion", sorted(CHECKS))
def test_criterion(criterion):
    ok, detail = CHECKS[criterion]()
    RESULTS[criterion] = (ok, detail)
    print(f"CRITERION {criterion}: {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    for i, fn in CHECKS.items():
        ok, detail = fn()
        print(f"CRITERION {i}: {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
