"""Command line: ``skewflip run <config.json>`` and ``skewflip list``.

Exit codes: 0 when every asserted check passes, 1 on a configuration error,
2 when a check fails or is inconclusive, 3 when a path turns non-finite.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace

from .experiments import (REGISTRY, ConfigError, ExperimentConfig, build_paths,
                          list_experiments, load_config, manifest, run_experiment)
from .paths import NonFiniteError
from .verification import VerificationReport

CSV_COLUMNS = ("experiment", "check", "statistic", "value", "tolerance", "pass",
               "n_paths", "n_steps", "seed")
DUMP_LIMIT = 10


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _verdict(rep: VerificationReport, passed) -> str:
    if rep.inconclusive:
        return "inconclusive"
    return "" if passed is None else ("true" if passed else "false")


def report_rows(experiment: str, reports: list[VerificationReport]) -> list[list[str]]:
    rows = []
    for rep in reports:
        n_steps = "" if rep.grid is None else str(rep.grid.n_steps)
        seed = "" if rep.seed is None else str(rep.seed)
        base = [experiment, rep.check]
        tail = [str(rep.n_paths), n_steps, seed]
        if rep.inconclusive and not rep.checks:
            rows.append(base + ["inconclusive", "", "", "inconclusive"] + tail)
        for c in rep.checks:
            tol = "" if c.comparator == "none" else _num(c.tolerance)
            rows.append(base + [c.name, _num(c.value), tol, _verdict(rep, c.passed)] + tail)
    return rows


def write_outputs(cfg: ExperimentConfig, reports: list[VerificationReport], out_dir: str,
                  threads: int) -> None:
    os.makedirs(out_dir, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(report_rows(cfg.experiment, reports))
    with open(os.path.join(out_dir, "report.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg.dump_paths and REGISTRY[cfg.experiment].ensemble:
        with open(os.path.join(out_dir, "paths.jsonl"), "w", encoding="utf-8") as fh:
            for i in range(min(cfg.n_paths, DUMP_LIMIT)):
                for role, p in build_paths(cfg, i).items():
                    fh.write(json.dumps({"path_index": i, "role": role,
                                         "horizon": p.grid.horizon,
                                         "n_steps": p.grid.n_steps,
                                         "values": p.values.tolist()}) + "\n")


def overall_exit(reports: list[VerificationReport]) -> int:
    for r in reports:
        if r.inconclusive or r.passed is False:
            return 2
    return 0


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.dump_paths:
            overrides["dump_paths"] = True
        if args.output_dir is not None:
            overrides["output_dir"] = args.output_dir
        if overrides:
            cfg = replace(cfg, **overrides)
    except ConfigError as exc:
        line = exc.line if exc.line is not None else 1
        print(f"{args.config}:{line}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{args.config}:1: cannot read config ({exc.strerror})", file=sys.stderr)
        return 1
    if args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return 1
    try:
        reports = run_experiment(cfg, args.threads)
    except NonFiniteError as exc:
        where = "unknown" if exc.path_index is None else exc.path_index
        print(f"non-finite value in path {where}: {exc}", file=sys.stderr)
        return 3
    write_outputs(cfg, reports, cfg.output_dir, args.threads)
    code = overall_exit(reports)
    for r in reports:
        print(f"{r.check}: {r.status}")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skewflip", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.add_argument("--threads", type=int, default=1, help="worker threads (results unchanged)")
    r.add_argument("--dump-paths", action="store_true", help="write paths.jsonl")
    r.add_argument("--output-dir", default=None, help="override the config output_dir")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="list experiment ids")
    ls.set_defaults(func=lambda a: (print(list_experiments()), 0)[1])
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
