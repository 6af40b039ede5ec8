"""Benchmark: compiled sweep kernel vs pure-Python fallback.

The derandomized shift sweep re-runs the whole carving pipeline once per
breakpoint interval, which dominates the runtime of subset extraction; this
script times both backends on the same instances.

    python benchmarks/bench_sweep.py [--sizes 8 16 24 32] [--eps 0.5]
"""
import argparse
import time

import numpy as np

from ultraskel import backend, points_metric
from ultraskel.ramsey import shift_breakpoints


def bench(n: int, eps: float, seed: int, repeat: int = 3):
    rng = np.random.default_rng(seed)
    ms = points_metric(rng.random((n, 2)))
    dist = np.asarray(ms.dist) / (ms.diameter() / 2.0)
    w = np.ones(n)
    bps = shift_breakpoints(dist, eps)
    mids = np.asarray([(bps[i] + bps[i + 1]) / 2 for i in range(len(bps) - 1)])
    out = {}
    for name in backend.available_backends():
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            scores = backend.sweep_scores(dist, w, w, eps, mids, backend=name)
            best = min(best, time.perf_counter() - t0)
        out[name] = (best, float(scores.max()))
    return len(mids), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 24, 32])
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    names = backend.available_backends()
    print(f"backends: {', '.join(names)}   (eps = {args.eps})")
    header = f"{'n':>4} {'intervals':>9}"
    for name in names:
        header += f" {name + ' [s]':>14}"
    if len(names) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for n in args.sizes:
        m, res = bench(n, args.eps, args.seed)
        row = f"{n:>4} {m:>9}"
        for name in names:
            row += f" {res[name][0]:>14.4f}"
        if len(names) == 2:
            a, b = (res[names[0]][0], res[names[1]][0])
            row += f" {b / a:>8.1f}x"
        scores = {res[name][1] for name in names}
        if len(scores) != 1:
            row += "   (score mismatch!)"
        print(row)


if __name__ == "__main__":
    main()
