"""Command-line entry point.

Exit status: 0 on success, 2 for bad parameters or input files, 3 when a
numerical target could not be reached.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import io, kernels
from ._version import __version__
from .bound import bound_bracket
from .correlate import best_permutation, bootstrap_errors, poisson_errors
from .errors import ConvergenceError, ParameterError, ParseError, WitnessError
from .jointdist import mask_joint_matrix
from .masks import MaskSpec
from .model import SincApprox, build_detection_model
from .montecarlo import SimConfig, simulate_counts
from .witness import DEFAULT_D_LIST, compare, evaluate_witness, scan_grid, source_slit_product

EXIT_OK, EXIT_PARAM, EXIT_CONVERGENCE = 0, 2, 3

# (d, Tx mm, Tp mm, measured I_d, its error, quoted Q_d) of the published reference table
TABLE1 = (
    (2, 3.36, 1.20, 1.73, 0.01, 1.570),
    (3, 3.36, 2.16, 1.69, 0.02, 1.525),
    (4, 7.44, 2.16, 1.72, 0.02, 1.557),
    (5, 6.00, 2.64, 1.66, 0.02, 1.488),
    (6, 7.92, 4.08, 1.68, 0.02, 1.546),
    (8, 7.92, 5.76, 1.61, 0.04, 1.517),
    (9, 8.64, 5.76, 1.56, 0.05, 1.491),
    (10, 7.20, 5.04, 1.47, 0.05, 1.438),
    (12, 7.20, 8.64, 1.49, 0.06, 1.454),
    (15, 8.64, 7.92, 1.31, 0.11, 1.434),
    (20, 8.64, 8.64, 1.16, 0.14, 1.386),
)


def _color(text: str, code: str) -> str:
    if os.environ.get("NO_COLOR") is not None or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _verdict(detected: bool) -> str:
    return _color("detected", "32") if detected else _color("not detected", "31")


def parse_range(text: str) -> list[float]:
    """``a:b:step`` inclusive of both ends, or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(round((b - a) / step)) + 1
            return [round(a + i * step, 10) for i in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"bad range {text!r}; expected a:b:step or a comma list") from None


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"bad integer list {text!r}") from None


def _model(args):
    if args.config:
        source, optics = io.read_config(args.config)
        return build_detection_model(source, optics, args.sinc)
    return build_detection_model(sinc_approx=args.sinc)


def _provenance(args) -> dict:
    meta = {"command": " ".join(["periodic-witness", *args.argv]), "config": args.config,
            "kernel": args.kernel or kernels.DEFAULT,
            "sinc_approx": args.sinc}
    return meta


# ---------------------------------------------------------------- subcommands


def cmd_bound(args) -> int:
    model = _model(args)
    c = args.c if args.c is not None else model.c
    res = bound_bracket(args.d, args.tx, args.tp, c, target_width=args.target_width,
                        n_terms=args.n_terms)
    print(f"Q_{args.d}({args.tx:g}, {args.tp:g}) = {res.value:.3f}  "
          f"bracket [{res.lower:.6f}, {res.upper:.6f}]  N0={res.n_terms}  gamma={res.gamma:.6g}"
          + ("  (trip point)" if res.trip_point else ""))
    if args.out:
        io._write_text(args.out, io._header_lines({"kind": "Bound", "tool": io.TOOL,
                                                     **io.model_metadata(model), **_provenance(args)})
                       + ["d,Tx_mm,Tp_mm,gamma,lower,upper,n_terms,Q_d,trip_point",
                          ",".join(io.fmt(v) for v in (args.d, args.tx, args.tp, res.gamma, res.lower,
                                                       res.upper, res.n_terms, res.value,
                                                       res.trip_point))])
    return EXIT_OK


def cmd_matrix(args) -> int:
    model = _model(args)
    spec_a = MaskSpec(args.d, args.t, args.offset)
    spec_b = MaskSpec(args.d, args.t_b or args.t, args.offset if args.offset_b is None else args.offset_b)
    J = mask_joint_matrix(model, args.domain, spec_a, spec_b, tol=args.tol,
                          support_sigmas=args.support_sigmas, kernel=args.kernel)
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        print(J.entries)
    print(f"captured mass {J.captured_mass:.12f}")
    if args.out:
        io.write_joint_matrix(args.out, J, {**io.model_metadata(model), **_provenance(args)})
    return EXIT_OK


def _print_stats(stats, res):
    err = f" +- {stats.sigma_I:.4f}" if stats.sigma_I is not None else ""
    print(f"C_xx = {stats.C_xx:.5f}  C_pp = {stats.C_pp:.5f}  I_d = {stats.I_d:.5f}{err}")
    sig = f"  ({res.significance:.1f} sigma)" if res.significance is not None else ""
    print(f"Q_d = {res.bound.value:.3f}  margin = {res.margin:+.5f}{sig}  {_verdict(res.detected)}")


def cmd_witness(args) -> int:
    model = _model(args)
    if args.counts_ip or args.counts_ff:
        if not (args.counts_ip and args.counts_ff):
            raise ParameterError("--counts-ip and --counts-ff must be given together")
        N_ip = io.read_count_matrix(args.counts_ip)
        N_ff = io.read_count_matrix(args.counts_ff)
        if N_ip.d != N_ff.d:
            raise ParameterError("count matrices have different d")
        tx = args.tx if args.tx is not None else N_ip.period
        tp = args.tp if args.tp is not None else N_ff.period
        if tx is None or tp is None:
            raise ParameterError("mask periods missing: pass --tx/--tp")
        g_x = g_p = None
        if args.optimize_permutation:
            g_x, g_p = best_permutation(N_ip), best_permutation(N_ff)
            print(f"g_x = {list(g_x)}  g_p = {list(g_p)}")
        if args.bootstrap:
            stats = bootstrap_errors(N_ip, N_ff, g_x, g_p, replicas=args.bootstrap, seed=args.seed)
        else:
            stats = poisson_errors(N_ip, N_ff, g_x, g_p)
        res = compare(stats, bound_bracket(N_ip.d, tx, tp, model.c))
        d = N_ip.d
    else:
        if args.d is None or args.tx is None or args.tp is None:
            raise ParameterError("model mode needs --d, --tx and --tp")
        res = evaluate_witness(model, args.d, args.tx, args.tp, tol=args.tol,
                               offset_x=args.offset_x, offset_p=args.offset_p,
                               support_sigmas=args.support_sigmas, kernel=args.kernel)
        d, tx, tp = args.d, args.tx, args.tp
    _print_stats(res.stats, res)
    if args.out:
        cols = "d,Tx_mm,Tp_mm,C_xx,C_pp,I_d,sigma_I,Q_d,margin,detected"
        vals = (d, tx, tp, res.stats.C_xx, res.stats.C_pp, res.stats.I_d,
                res.stats.sigma_I if res.stats.sigma_I is not None else float("nan"),
                res.bound.value, res.margin, res.detected)
        io._write_text(args.out, io._header_lines({"kind": "Witness", "tool": io.TOOL,
                                                     **io.model_metadata(model), **_provenance(args)})
                       + [cols, ",".join(io.fmt(v) for v in vals)])
    return EXIT_OK


def cmd_scan(args) -> int:
    model = _model(args)
    d_list = parse_int_list(args.d) if args.d else list(DEFAULT_D_LIST)
    t_all = parse_range(args.t_range) if args.t_range else None
    tx = parse_range(args.tx_range) if args.tx_range else t_all
    tp = parse_range(args.tp_range) if args.tp_range else t_all
    if tx is None or tp is None:
        raise ParameterError("give --t-range or both --tx-range and --tp-range")
    t0 = time.perf_counter()
    table = scan_grid(model, d_list, tx, tp, tol=args.tol, equal_periods=args.equal_periods,
                      support_sigmas=args.support_sigmas, kernel=args.kernel, workers=args.threads)
    elapsed = time.perf_counter() - t0
    io.write_scan(args.out or "-", table, model, _provenance(args))
    n_det = int(sum(r.detected for r in table.rows))
    print(f"{len(table.rows)} points, {n_det} detected, {len(table.errors())} errors, "
          f"{elapsed:.1f} s", file=sys.stderr)
    return EXIT_CONVERGENCE if table.errors() else EXIT_OK


def cmd_simulate(args) -> int:
    model = _model(args)
    eff = args.efficiency or [1.0]
    if len(eff) > 2:
        raise ParameterError("--efficiency takes one or two values")
    ea, eb = (eff[0], eff[0]) if len(eff) == 1 else eff
    sim = SimConfig(args.pairs, seed=args.seed, efficiency_a=ea, efficiency_b=eb)
    ip, ff = simulate_counts(model, args.d, args.tx, args.tp, sim)
    prefix = args.out or "counts"
    stats = poisson_errors(ip, ff)
    res = compare(stats, bound_bracket(args.d, args.tx, args.tp, model.c))
    _print_stats(stats, res)
    prov = _provenance(args)
    io.write_count_matrix(f"{prefix}_ip.csv", ip, prov)
    io.write_count_matrix(f"{prefix}_ff.csv", ff, prov)
    print(f"wrote {args.out}_ip.csv and {args.out}_ff.csv", file=sys.stderr)
    return EXIT_OK


def cmd_rebin(args) -> int:
    H = io.read_histogram(args.hist)
    spec_a = MaskSpec(args.d, args.t, args.offset)
    spec_b = MaskSpec(args.d, args.t_b or args.t, args.offset if args.offset_b is None else args.offset_b)
    J = io.rebin_histogram(H, spec_a, spec_b, domain=args.domain)
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        print(J.entries)
    print(f"captured mass {J.captured_mass:.12g}")
    if args.out:
        io.write_joint_matrix(args.out, J, {"source_histogram": args.hist, **_provenance(args)})
    return EXIT_OK


def cmd_table1(args) -> int:
    model = _model(args)
    cols = ["d", "Tx_mm", "Tp_mm", "Q_d", "lower", "upper", "Q_ref", "Q_diff", "I_ref", "I_ref_err"]
    if not args.bounds_only:
        cols += ["C_xx", "C_pp", "I_d", "margin", "detected", "sxsp"]
    lines = [",".join(cols)]
    t0 = time.perf_counter()
    for d, tx, tp, i_ref, i_err, q_ref in TABLE1:
        b = bound_bracket(d, tx, tp, model.c)
        vals = [d, tx, tp, b.value, b.lower, b.upper, q_ref, b.value - q_ref, i_ref, i_err]
        line = f"d={d:<3d} Tx={tx:5.2f} Tp={tp:5.2f}  Q={b.value:.3f} (ref {q_ref:.3f})"
        if not args.bounds_only:
            res = evaluate_witness(model, d, tx, tp, tol=args.tol, kernel=args.kernel)
            s = res.stats
            vals += [s.C_xx, s.C_pp, s.I_d, res.margin, res.detected,
                     source_slit_product(model, d, tx, tp)]
            line += f"  I={s.I_d:.4f}  margin={res.margin:+.4f}  {_verdict(res.detected)}"
        lines.append(",".join(io.fmt(v) for v in vals))
        print(line)
    print(f"{time.perf_counter() - t0:.2f} s", file=sys.stderr)
    if args.out:
        io._write_text(args.out, io._header_lines({"kind": "Table1", "tool": io.TOOL,
                                                     **io.model_metadata(model), **_provenance(args)})
                       + lines)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON source/optics configuration")
    common.add_argument("--sinc", default="gaussian_variance_match",
                        choices=[s.value for s in SincApprox],
                        help="far-field phase-matching profile (default: %(default)s)")
    common.add_argument("--kernel", choices=kernels.available(), default=None,
                        help="integration kernel (default: %s)" % kernels.DEFAULT)
    common.add_argument("--out", help="output file (CSV)")

    quad = argparse.ArgumentParser(add_help=False)
    quad.add_argument("--tol", type=float, default=1e-6, help="quadrature tolerance per matrix")
    quad.add_argument("--support-sigmas", type=float, default=6.0,
                      help="half-width of the integration window in marginal widths")

    p = argparse.ArgumentParser(prog="periodic-witness",
                                description="Periodic-mask entanglement witness for photon pairs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bound", parents=[common], help="separability bound Q_d")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--tx", type=float, required=True, help="IP mask period (mm)")
    s.add_argument("--tp", type=float, required=True, help="FF mask period (mm)")
    s.add_argument("--c", type=float, default=None, help="M alpha in mm^2 (overrides --config)")
    s.add_argument("--target-width", "--tol", type=float, default=1e-4,
                   help="required upper - lower bracket width")
    s.add_argument("--n-terms", type=int, default=None, help="fixed truncation order")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("matrix", parents=[common, quad], help="joint mask probabilities")
    s.add_argument("--domain", choices=["IP", "FF"], required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--t", type=float, required=True, help="mask period (mm)")
    s.add_argument("--offset", type=float, default=0.0, help="mask offset (mm)")
    s.add_argument("--t-b", type=float, default=None, help="arm B period if different (mm)")
    s.add_argument("--offset-b", type=float, default=None, help="arm B offset (mm)")
    s.set_defaults(func=cmd_matrix)

    s = sub.add_parser("witness", parents=[common, quad], help="I_d against Q_d")
    s.add_argument("--d", type=int)
    s.add_argument("--tx", type=float, help="IP mask period (mm)")
    s.add_argument("--tp", type=float, help="FF mask period (mm)")
    s.add_argument("--offset-x", type=float, default=0.0)
    s.add_argument("--offset-p", type=float, default=0.0)
    s.add_argument("--counts-ip", help="IP CountMatrix CSV (measured mode)")
    s.add_argument("--counts-ff", help="FF CountMatrix CSV (measured mode)")
    s.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicas for errors")
    s.add_argument("--optimize-permutation", action="store_true",
                   help="maximise the pairing over permutations (biased upward on noisy counts)")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("scan", parents=[common, quad], help="witness over a period grid")
    s.add_argument("--d", help="comma list of dimensions (default: all 11 reference values)")
    s.add_argument("--t-range", help="a:b:step for both periods (mm)")
    s.add_argument("--tx-range", help="a:b:step for Tx (mm)")
    s.add_argument("--tp-range", help="a:b:step for Tp (mm)")
    s.add_argument("--equal-periods", action="store_true", help="only Tx == Tp")
    s.add_argument("--threads", type=int, default=1, help="worker processes")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo count matrices")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--tx", type=float, required=True)
    s.add_argument("--tp", type=float, required=True)
    s.add_argument("--pairs", type=int, default=100_000, help="pairs per setting")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--efficiency", type=float, nargs="+", help="detection efficiency per arm")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("rebin", parents=[common], help="rebin a fine joint histogram")
    s.add_argument("--hist", required=True, help="FineHistogram CSV")
    s.add_argument("--domain", choices=["IP", "FF"], default="IP")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--offset", type=float, default=0.0)
    s.add_argument("--t-b", type=float, default=None)
    s.add_argument("--offset-b", type=float, default=None)
    s.set_defaults(func=cmd_rebin)

    s = sub.add_parser("table1", parents=[common, quad], help="the 11 pinned reference rows")
    s.add_argument("--bounds-only", action="store_true", help="skip the model witness values")
    s.set_defaults(func=cmd_table1)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.achieved is not None:
            print(f"achieved: {exc.achieved}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ParameterError, ParseError, WitnessError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
