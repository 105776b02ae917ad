"""Run the acceptance config under 1 and N threads and print one line per criterion.

    python3 scripts/run_acceptance.py [--threads 8] [--out out/acceptance_check]
"""
import argparse
import json
from pathlib import Path

from skewflip.cli import main as cli

FILES = ("report.csv", "report.json", "manifest.json")
ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--threads", type=int, default=8)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default="out/acceptance_check")
    args = ap.parse_args()
    cfg = str(ROOT / "configs" / "acceptance.json")
    dirs = {}
    for t in (1, args.threads):
        dirs[t] = Path(args.out) / f"threads_{t}"
        argv = ["run", cfg, "--threads", str(t), "--output-dir", str(dirs[t])]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        cli(argv)

    status: dict[int, list[str]] = {}
    for rep in json.loads((dirs[1] / "report.json").read_text()):
        status.setdefault(rep["parameters"]["criterion"], []).append(rep["status"])
    same = all((dirs[1] / f).read_bytes() == (dirs[args.threads] / f).read_bytes() for f in FILES)
    status[8] = ["pass" if same else "fail"]
    for crit in sorted(status):
        ok = all(s in ("pass", "descriptive") for s in status[crit])
        print(f"criterion {crit}: {'PASS' if ok else 'FAIL'} ({', '.join(status[crit])})")


if __name__ == "__main__":
    main()
