"""False-failure rate of the statistical tests on ground-truth Brownian inputs.

Prints, per seed, whether every test passed and which ones failed.  The
local-time mean check has a fixed 0.03 tolerance sized for N = 10**4 paths;
much smaller ensembles fail it by sampling noise alone.
"""
import argparse

from skewflip.experiments import ExperimentConfig, calibration_seed, ground_truth_suite


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--n-paths", type=int, default=10_000)
    ap.add_argument("--n-steps", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    cfg = ExperimentConfig(experiment="calibration", n_paths=args.n_paths,
                           n_steps=args.n_steps, seed=args.seed)
    passed = 0
    for k in range(args.seeds):
        reps = ground_truth_suite(cfg, calibration_seed(args.seed, k), args.threads)
        bad = [r.check for r in reps if not r.passed]
        passed += not bad
        print(f"seed {k:3d}: {'pass' if not bad else 'fail ' + ','.join(bad)}")
    print(f"pass fraction {passed / args.seeds:.3f} over {args.seeds} seeds")


if __name__ == "__main__":
    main()
