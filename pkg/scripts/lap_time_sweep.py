#!/usr/bin/env python3
"""Lap time and solve time across segment lengths and grid sizes.

Drives ``speedid solve`` once per configuration and collects its JSON
summaries. With ``--track`` pointing at a radius profile CSV the sweep runs
on that circuit; otherwise it uses a synthetic chicane.

    python scripts/lap_time_sweep.py --track bridge.csv --total-length 5049 --v0 312 > sweep.jsonl
    python scripts/lap_time_sweep.py --quick
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

FULL = [
    (10, 400, 200, 100),
    (10, 800, 400, 200),
    (5, 400, 200, 100),
    (5, 800, 200, 100),
    (5, 800, 400, 200),
    (5, 800, 800, 800),
    (5, 1000, 1000, 1000),
    (1, 800, 400, 200),
    (1, 1000, 1000, 1000),
    (1, 1600, 1000, 1000),
]

QUICK = [
    (10, 100, 50, 50),
    (5, 100, 50, 50),
    (5, 200, 100, 50),
]


@dataclass
class SweepConfig:
    track: str | None = None
    total_length: float | None = None
    v0: float = 100.0
    quick: bool = False
    synth_segments_m: float = 500.0


def solve_once(cfg: SweepConfig, s: float, nv: int, na: int, nu: int, workdir: Path) -> dict:
    cmd = [
        sys.executable, "-m", "speedid", "solve",
        "--segment-length", str(s), "--nv", str(nv), "--na", str(na), "--nu", str(nu),
        "--v0", str(cfg.v0), "--out", str(workdir / f"policy_{s}_{nv}_{na}_{nu}.txt"),
    ]
    if cfg.track:
        cmd += ["--track", cfg.track]
        if cfg.total_length is not None:
            cmd += ["--total-length", str(cfg.total_length)]
    else:
        cmd += ["--synth", "chicane", "--n-segments", str(int(cfg.synth_segments_m // s)),
                "--block", str(max(1, int(50 // s)))]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        return {"s": s, "nv": nv, "na": na, "nu": nu, "error": proc.stderr.strip()}
    return json.loads(proc.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--track")
    ap.add_argument("--total-length", type=float)
    ap.add_argument("--v0", type=float, default=SweepConfig.v0)
    ap.add_argument("--quick", action="store_true", help="small grids only")
    cfg = SweepConfig(**vars(ap.parse_args(argv)))

    rows = QUICK if cfg.quick else FULL
    with tempfile.TemporaryDirectory() as tmp:
        for s, nv, na, nu in rows:
            record = solve_once(cfg, s, nv, na, nu, Path(tmp))
            record.pop("policy_file", None)
            print(json.dumps(record, sort_keys=True), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
