#!/usr/bin/env python3
"""Recomputes metrics.json from trace.csv with an independent implementation.

usage: recompute_metrics.py <magsuture binary> <config> <work dir>
Runs one simulation, then compares every reported metric to 1e-12 relative.
"""

import csv
import json
import math
import subprocess
import sys
from pathlib import Path


def wrap(a):
    r = math.fmod(a + math.pi, 2.0 * math.pi)
    if r < 0.0:
        r += 2.0 * math.pi
    return r - math.pi


def recompute(rows, tol):
    n = len(rows)
    nodet = incorrect = correct = flips = 0
    s_along = s_across = s_orient = s_tip = 0.0
    for r in rows:
        s_tip += r["tip_err_mm"] ** 2
        if r["detect_tag"] != "detected":
            nodet += 1
            continue
        ex = r["est_x_mm"] - r["gt_x_mm"]
        ey = r["est_y_mm"] - r["gt_y_mm"]
        if math.hypot(ex, ey) > tol:
            incorrect += 1
            continue
        correct += 1
        c, s = math.cos(r["gt_theta_rad"]), math.sin(r["gt_theta_rad"])
        s_along += (ex * c + ey * s) ** 2
        s_across += (-ex * s + ey * c) ** 2
        d = wrap(r["est_theta_rad"] - r["gt_theta_rad"])
        if abs(d) > math.pi / 2.0:
            flips += 1
            d = wrap(d + math.pi)
        s_orient += d * d
    out = {
        "frame_count": n,
        "correct_count": correct,
        "detected_count": n - nodet,
        "flip_count": flips,
        "no_detection_rate": nodet / n,
        "incorrect_detection_rate": incorrect / n,
        "tip_tracking_rms_mm": math.sqrt(s_tip / n),
        "rms_along_mm": 0.0,
        "rms_across_mm": 0.0,
        "rms_orientation_deg": 0.0,
        "flip_rate": 0.0,
    }
    if correct:
        out["rms_along_mm"] = math.sqrt(s_along / correct)
        out["rms_across_mm"] = math.sqrt(s_across / correct)
        out["rms_orientation_deg"] = math.degrees(math.sqrt(s_orient / correct))
        out["flip_rate"] = flips / correct
    return out


def main():
    binary, config, work = sys.argv[1], sys.argv[2], Path(sys.argv[3])
    proc = subprocess.run([binary, "simulate", config, "--out", str(work)], capture_output=True, text=True)
    if proc.returncode != 0:
        print(proc.stderr, file=sys.stderr)
        return 1
    with open(work / "metrics.json") as f:
        reported = json.load(f)
    with open(work / "trace.csv", newline="") as f:
        rows = []
        for raw in csv.DictReader(f):
            row = {k: (v if k == "detect_tag" else float(v)) for k, v in raw.items()}
            rows.append(row)
    mine = recompute(rows, reported["incorrect_tolerance_mm"])
    bad = 0
    for key, value in mine.items():
        got = reported[key]
        if abs(got - value) > 1e-12 * max(1.0, abs(value)):
            print(f"mismatch {key}: reported {got!r}, recomputed {value!r}")
            bad += 1
    print(f"{len(mine)} metrics compared over {len(rows)} rows, {bad} mismatches")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
