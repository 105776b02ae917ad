"""Acceptance criteria 1-9, judged from the CLI's own output files.

The acceptance config runs twice (1 and 8 threads).  Each criterion prints one
``PASS``/``FAIL`` line; the lines are repeated in the terminal summary.
"""
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CONFIG = ROOT / "configs" / "acceptance.json"
pytestmark = pytest.mark.slow

FILES = ("report.csv", "report.json", "manifest.json")

RESULTS: dict[int, str] = {}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    out = {}
    for threads in (1, 8):
        d = tmp_path_factory.mktemp(f"acceptance_t{threads}")
        proc = subprocess.run([sys.executable, "-m", "skewflip", "run", str(CONFIG),
                               "--threads", str(threads), "--output-dir", str(d)],
                              capture_output=True, text=True, check=False)
        assert proc.returncode in (0, 2), proc.stderr
        out[threads] = d
    return out


@pytest.fixture(scope="module")
def report(runs):
    reps = json.loads((runs[1] / "report.json").read_text())
    by_crit = {}
    for r in reps:
        by_crit.setdefault(r["parameters"]["criterion"], []).append(r)
    return by_crit


def rows(report, crit):
    return {c["name"]: c for r in report[crit] for c in r["checks"]}


def verdict(crit, ok, detail):
    line = f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[crit] = line
    print(line)
    assert ok, line


def test_criterion_1_occupation_law(report):
    r = rows(report, 1)
    fr = {t: r[f"fraction_t{t:g}"]["value"] for t in (0.25, 0.5, 0.75)}
    ok = all(abs(v - 0.7) <= 0.031 for v in fr.values())
    verdict(1, ok, "P(Y_t > 0) at t=.25/.5/.75: "
            + ", ".join(f"{v:.4f}" for v in fr.values()) + " (target 0.7 +- 0.031)")


def test_criterion_2_driver_reconstruction(report):
    r = rows(report, 2)
    qv, ks = r["mean_qv"]["value"], r["ks_increments"]["value"]
    ok = abs(qv - 1.0) < 0.05 and ks < 0.02
    verdict(2, ok, f"mean terminal QV {qv:.4f} (1 +- 0.05), KS {ks:.4f} (< 0.02)")


def test_criterion_3_representation(report):
    r = rows(report, 3)
    err = r["mean_relative_error"]["value"]
    used = report[3][0]["n_paths"] - r["excluded_outer"]["value"]
    verdict(3, err < 0.05 and used > 0,
            f"mean relative error {err:.4f} (< 0.05) over {used:.0f} outer paths")


def test_criterion_4_carriers(report):
    r = rows(report, 4)
    v, a = r["fraction_outside_v"]["value"], r["fraction_outside_A"]["value"]
    verdict(4, v < 0.02 and a < 0.02,
            f"fraction outside: v {v:.3g}, A {a:.3g} (both < 0.02)")


def test_criterion_5_local_time(report):
    r = rows(report, 5)
    mean, gap = r["mean_tanaka"]["value"], r["median_gap"]["value"]
    ok = abs(mean - math.sqrt(2 / math.pi)) < 0.03 and gap < 0.10
    verdict(5, ok, f"E[L] {mean:.4f} (sqrt(2/pi) +- 0.03), median gap {gap:.4f} (< 0.10)")


def test_criterion_6_characterization(report):
    r = rows(report, 6)["max_abs_z"]
    verdict(6, r["passed"] is True,
            f"max |z| {r['value']:.3f} vs Bonferroni critical {r['tolerance']:.3f}")


def test_criterion_7_reductions(report):
    r = rows(report, 7)
    worst = max(c["value"] for c in r.values())
    ok = len(r) >= 10 and worst == 0 and all(c["passed"] for c in r.values())
    verdict(7, ok, f"{len(r)} bit-wise reductions, max abs difference {worst:g}")


def test_criterion_8_determinism(runs):
    same = {f: (runs[1] / f).read_bytes() == (runs[8] / f).read_bytes() for f in FILES}
    verdict(8, all(same.values()), "byte-identical under 1 vs 8 threads: "
            + ", ".join(f"{f}={'yes' if s else 'no'}" for f, s in same.items()))


def test_criterion_9_calibration(report):
    r = rows(report, 9)
    frac = r["pass_fraction"]["value"]
    n = report[9][0]["parameters"].get("calibration_seeds", 20)
    verdict(9, frac >= 0.95, f"ground-truth suite passed on {frac:.0%} of {n} seeds (>= 95%)")
