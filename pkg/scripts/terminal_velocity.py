#!/usr/bin/env python3
"""Full-throttle run down a long straight: the profile should level off at sqrt(a_t_max / c_v).

    python scripts/terminal_velocity.py --length 2000 --nv 401
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from speedid import F1, Grids, rollout, solve, synth_track
from speedid.vehicle import kmh_to_ms, ms_to_kmh


@dataclass
class DemoConfig:
    length: float = 2000.0
    segment_length: float = 5.0
    nv: int = 401
    na: int = 101
    nu: int = 101
    v0: float = 100.0
    every: float = 200.0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, value in vars(DemoConfig()).items():
        ap.add_argument("--" + name.replace("_", "-"), type=type(value), default=value)
    cfg = DemoConfig(**vars(ap.parse_args(argv)))

    n = int(cfg.length // cfg.segment_length)
    track = synth_track("straight", n, cfg.segment_length, F1)
    result = solve(track, Grids.make(cfg.nv, cfg.na, cfg.nu), F1)
    prof = rollout(result.policy, track, F1, kmh_to_ms(cfg.v0))

    target = ms_to_kmh(F1.terminal_velocity)
    stride = max(1, int(cfg.every // cfg.segment_length))
    print(f"{'x [m]':>8} {'v [km/h]':>9} {'u [%]':>7}")
    for i in range(0, n + 1, stride):
        u = f"{100 * prof.u_hat[i]:7.2f}" if i < n else f"{'':>7}"
        print(f"{i * cfg.segment_length:8.0f} {ms_to_kmh(prof.v_hat[i]):9.2f} {u}")
    final = ms_to_kmh(prof.v_hat[-1])
    print(f"terminal velocity {target:.2f} km/h; final {final:.2f} km/h "
          f"({100 * abs(final - target) / target:.2f}% off); run time {prof.total_time:.3f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
