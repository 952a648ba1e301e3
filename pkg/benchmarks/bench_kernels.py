"""Time the compiled and NumPy slit-pair kernels on the same matrices.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from periodic_witness import kernels
from periodic_witness.jointdist import mask_joint_matrix
from periodic_witness.masks import MaskSpec
from periodic_witness.model import build_detection_model

CASES = [
    ("IP", 2, 3.36),
    ("FF", 6, 4.08),
    ("IP", 20, 0.24),
    ("FF", 20, 0.24),
    ("IP", 4, 0.048),
]


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-6)
    args = p.parse_args()
    model = build_detection_model()
    names = kernels.available()
    print(f"kernels: {', '.join(names)} (default {kernels.DEFAULT})")
    print(f"{'case':<18}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}{'max diff':>12}")
    for domain, d, T in CASES:
        res = {}
        for n in names:
            res[n] = best_time(lambda: mask_joint_matrix(model, domain, MaskSpec(d, T), tol=args.tol,
                                                         kernel=n), args.repeat)
        row = f"{domain} d={d:<3d}T={T:<6g}" + "".join(f"{res[n][0]:>11.3f}s" for n in names)
        if len(names) == 2:
            diff = np.max(np.abs(res["compiled"][1].entries - res["python"][1].entries))
            row += f"{res['python'][0] / res['compiled'][0]:>9.1f}x{diff:>12.1e}"
        print(row)


if __name__ == "__main__":
    main()
