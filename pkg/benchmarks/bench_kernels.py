"""Compare the compiled and numpy kernels on threshold and nearest-segment queries.

    python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""
import argparse
import time

import numpy as np

from udset import kernels
from udset.construction import build_tables
from udset.dense_net import uniform_ball


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    T = build_tables(6)
    a, b = T.pieces(4)
    pts = uniform_ball(args.points, 2, np.random.default_rng(0))
    backends = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])
    thr = 0.5 * T.w[4]
    rows, ref = [], None
    for be in backends:
        idx = kernels.SegmentIndex(a, b, pad=T.w[4], backend=be)
        t_any, hit = timed(lambda: idx.any_within(pts, thr), args.repeat)
        few = pts[:2000]
        t_min, (dist, _) = timed(lambda: idx.min_dist(few), args.repeat)
        if ref is None:
            ref = (hit, dist)
        agree = bool(np.array_equal(hit, ref[0]) and np.allclose(dist, ref[1], rtol=0, atol=1e-15))
        rows.append((be, t_any, t_min, agree))
    print(f"{len(a)} segments, {args.points} points (any_within), 2000 points (min_dist)")
    print(f"{'backend':8s} {'any_within s':>13s} {'min_dist s':>11s} agree")
    for be, t1, t2, ag in rows:
        print(f"{be:8s} {t1:13.4f} {t2:11.4f} {ag}")
    if len(rows) == 2:
        print(f"speedup any_within x{rows[0][1] / rows[1][1]:.1f}, min_dist x{rows[0][2] / rows[1][2]:.1f}")


if __name__ == "__main__":
    main()
