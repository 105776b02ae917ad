"""How far |W| strays from X = |B| for the companion W = int Z dX.

Prints the median of sup_t ||W_t| - X_t| in absolute terms and in units of
sqrt(dt), and the fitted exponent in dt.
"""
import argparse
import math

import numpy as np

from skewflip.constructors import companion_W_from_abs
from skewflip.paths import TimeGrid, simulate_brownian
from skewflip.rng import Streams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=200)
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096, 16384])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    med = []
    print(f"{'n':>7} {'median sup gap':>15} {'/ sqrt(dt)':>11} {'share < 5 sqrt(dt)':>19}")
    for n in args.sizes:
        g = TimeGrid(1.0, n)
        gaps = []
        for i in range(args.paths):
            b = simulate_brownian(g, Streams(args.seed, i)("B"))
            x = b.derive(np.abs(b.values), "abs_B")
            w = companion_W_from_abs(x, Streams(args.seed, i)("zeta_half"))
            gaps.append(np.max(np.abs(np.abs(w.values) - x.values)))
        gaps = np.array(gaps)
        m = float(np.median(gaps))
        med.append(m)
        s = math.sqrt(g.dt)
        print(f"{n:7d} {m:15.5f} {m / s:11.2f} {np.mean(gaps < 5 * s):19.3f}")
    rate = np.polyfit(np.log(1.0 / np.array(args.sizes)), np.log(med), 1)[0]
    print(f"fitted exponent in dt: {rate:.3f}")


if __name__ == "__main__":
    main()
