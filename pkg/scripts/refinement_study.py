"""Convergence of the discrete Tanaka local time under grid refinement.

Each level inserts Brownian-bridge midpoints, so every grid sees the same
path.  Prints the mean sup-distance between consecutive levels (on the coarse
grid) and the fitted exponent in dt.
"""
import argparse
import math

import numpy as np

from skewflip.local_time import tanaka_raw


def refine(b, rng):
    n = b.shape[-1] - 1
    mid = 0.5 * (b[:, :-1] + b[:, 1:]) + rng.standard_normal((b.shape[0], n)) * math.sqrt(0.25 / n)
    out = np.empty((b.shape[0], 2 * n + 1))
    out[:, ::2], out[:, 1::2] = b, mid
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=1000)
    ap.add_argument("--n0", type=int, default=256)
    ap.add_argument("--levels", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    b = np.zeros((args.paths, args.n0 + 1))
    b[:, 1:] = np.cumsum(rng.standard_normal((args.paths, args.n0)) / math.sqrt(args.n0), axis=1)
    ns, sups = [], []
    print(f"{'n':>8} {'mean sup |L_2n - L_n|':>24}")
    for _ in range(args.levels):
        fine = refine(b, rng)
        n = b.shape[1] - 1
        sup = float(np.mean(np.max(np.abs(tanaka_raw(fine)[:, ::2] - tanaka_raw(b)), axis=1)))
        print(f"{n:8d} {sup:24.5f}")
        ns.append(n)
        sups.append(sup)
        b = fine
    rate = np.polyfit(np.log(1.0 / np.array(ns)), np.log(sups), 1)[0]
    print(f"fitted exponent in dt: {rate:.3f}")


if __name__ == "__main__":
    main()
