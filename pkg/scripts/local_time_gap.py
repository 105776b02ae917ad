"""Median relative Tanaka/occupation gap against the occupation bandwidth.

Sweeps eps = dt**p for several exponents p and grid sizes on a Brownian
ensemble and prints the mean local times and the median gap
|L_occ - L_tan| / max(L_tan, 0.1).
"""
import argparse
import math

import numpy as np

from skewflip.local_time import occupation_values, tanaka_raw


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=4000)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096, 16384])
    ap.add_argument("--powers", type=float, nargs="+", default=[0.3, 0.4, 0.45, 0.5])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>6} {'p':>5} {'E[L tanaka]':>12} {'E[L occ]':>9} {'median gap':>11}")
    for n in args.sizes:
        dt = 1.0 / n
        lt = np.empty(args.paths)
        lo = {p: np.empty(args.paths) for p in args.powers}
        for s in range(0, args.paths, 500):
            m = min(500, args.paths - s)
            b = np.zeros((m, n + 1))
            b[:, 1:] = np.cumsum(rng.standard_normal((m, n)) * math.sqrt(dt), axis=1)
            lt[s:s + m] = tanaka_raw(b)[:, -1]
            for p in args.powers:
                lo[p][s:s + m] = occupation_values(b, dt ** p)[:, -1]
        for p in args.powers:
            gap = np.median(np.abs(lo[p] - lt) / np.maximum(lt, 0.1))
            print(f"{n:6d} {p:5.2f} {lt.mean():12.4f} {lo[p].mean():9.4f} {gap:11.4f}")


if __name__ == "__main__":
    main()
