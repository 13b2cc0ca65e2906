#!/usr/bin/env python3
"""End-to-end checks of the command-line tool.

usage: cli_smoke.py <magsuture binary> <configs dir> <work dir>
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

failures = []


def run(*args):
    return subprocess.run([str(a) for a in args], capture_output=True, text=True)


def check(name, cond, proc=None):
    if not cond:
        failures.append(name)
        print(f"FAIL {name}")
        if proc is not None:
            print(proc.stdout, proc.stderr, file=sys.stderr)
    else:
        print(f"ok   {name}")


def error_line(proc):
    try:
        j = json.loads(proc.stderr.strip().splitlines()[-1])
    except (ValueError, IndexError):
        return None
    return j if j.get("status") == "error" else None


def main():
    binary, configs, work = Path(sys.argv[1]), Path(sys.argv[2]), Path(sys.argv[3])
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)

    p = run(binary, "simulate", configs / "perfect_sensing.cfg", "--out", work / "sim")
    check("simulate exits 0", p.returncode == 0, p)
    check("simulate writes outputs",
          all((work / "sim" / f).exists() for f in ("trace.csv", "metrics.json", "resolved_config.cfg")))
    if p.returncode == 0:
        summary = json.loads(p.stdout.strip().splitlines()[-1])
        check("simulate reports status ok", summary.get("status") == "ok", p)

    p = run(binary, "eval", work / "sim" / "trace.csv")
    check("eval exits 0", p.returncode == 0, p)

    p = run(binary, "simulate", configs / "perfect_sensing.cfg", "--out", work / "multi", "--seeds", 3, "--jobs", 2)
    check("multi-seed simulate exits 0", p.returncode == 0, p)
    check("multi-seed summary", (work / "multi" / "summary.json").exists()
          and all((work / "multi" / f"seed_{s}" / "trace.csv").exists() for s in (1, 2, 3)), p)

    p = run(binary, "gen-scene", configs / "scene_corpus.cfg", "--out", work / "corpus", "--frames", 20)
    check("gen-scene exits 0", p.returncode == 0, p)
    check("gen-scene writes frames", (work / "corpus" / "frame_00019.pgm").exists()
          and (work / "corpus" / "truth.csv").exists())

    p = run(binary, "localize", work / "corpus", "--config", configs / "scene_corpus.cfg", "--out", work / "loc")
    check("localize exits 0", p.returncode == 0, p)
    check("localize writes outputs", (work / "loc" / "localization.csv").exists()
          and (work / "loc" / "metrics.json").exists(), p)

    p = run(binary, "simulate", work / "does_not_exist.cfg")
    j = error_line(p)
    check("missing config is a JSON usage error", p.returncode == 2 and j is not None and j["kind"] == "usage", p)

    p = run(binary, "localize", work / "no_such_dir")
    j = error_line(p)
    check("missing mask directory is a JSON io error", p.returncode == 1 and j is not None and j["kind"] == "io", p)

    bad = work / "bad.cfg"
    bad.write_text("sim.dt_s = 0.05\nsim.bogus = 1\n")
    p = run(binary, "simulate", bad)
    j = error_line(p)
    check("unknown key is a JSON config error",
          p.returncode == 1 and j is not None and j["kind"] == "config" and "sim.bogus" in j["message"], p)

    (work / "corpus" / "frame_00007.pgm").unlink()
    p = run(binary, "localize", work / "corpus", "--config", configs / "scene_corpus.cfg")
    j = error_line(p)
    check("missing mask names the frame", p.returncode == 1 and j is not None and "frame 7" in j["message"], p)

    p = run(binary)
    check("no subcommand is a usage error", p.returncode == 2, p)

    shutil.rmtree(work, ignore_errors=True)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
