"""Command-line front end.

Commands: ``solve``, ``rollout``, ``bench``, ``oracle-check``, ``synth-track``.
Exit status is 0 on success, 1 on runtime failure, 2 on usage or
validation errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time

from .bench import format_table, run_bench
from .config import ConfigError, RunConfig, load_config
from .oracle import OracleBudgetError, check_against_solver
from .policy import PolicyFormatError, check_feasibility, load_policy, rollout, save_policy
from .solver import build_model, solve_model
from .track import TrackFormatError, synth_track, write_radius_profile
from .vehicle import kmh_to_ms, ms_to_kmh

log = logging.getLogger("speedid")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _shared(p: argparse.ArgumentParser) -> None:
    # defaults are None so unset flags do not mask config-file values
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--track", help="radius profile CSV (position_m,radius_m)")
    p.add_argument("--total-length", type=float, help="path length to segment, m")
    p.add_argument("--synth", choices=["straight", "circle", "chicane"], help="synthetic track kind")
    p.add_argument("--n-segments", type=int)
    p.add_argument("--corner-radius", type=float)
    p.add_argument("--block", type=int)
    p.add_argument("--segment-length", type=float, help="segment length s, m")
    p.add_argument("--nv", type=int, help="speed states |V|")
    p.add_argument("--na", type=int, help="acceleration states |A|")
    p.add_argument("--nu", type=int, help="control states |U|")
    p.add_argument("--v0", type=float, help="initial speed, km/h")
    p.add_argument("--tmax", type=float, help="utility offset t_max, s")
    p.add_argument("--backend", choices=["dense", "sparse", "zero_compressed"])
    p.add_argument("--out", help="output path")
    p.add_argument("--seed", type=int, help="reserved; all algorithms are deterministic")


def _config(args) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "func", "policy")}
    return load_config(args.config, overrides)


def _emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True))


def cmd_solve(args) -> int:
    cfg = _config(args)
    track = cfg.build_track()
    grids = cfg.grids()
    params = cfg.vehicle()
    model = build_model(track, grids, params, cfg.tmax)
    start = time.perf_counter()
    result = solve_model(model, cfg.backend)
    wall_ms = (time.perf_counter() - start) * 1e3
    v0 = kmh_to_ms(cfg.v0)
    profile = rollout(result.policy, track, params, v0)
    report = check_feasibility(profile, track, params, kmh_to_ms(grids.speed.step))
    out = cfg.out or "policy.txt"
    save_policy(result.policy, out)
    nv, na, nu = grids.sizes
    _emit({
        "policy_file": out,
        "lap_time_s": profile.total_time,
        "root_utility_s": result.root_utility(v0),
        "backend": result.backend,
        "wall_ms": wall_ms,
        "nv": nv, "na": na, "nu": nu,
        "n_segments": track.n,
        "segment_length_m": track.segment_length,
        "t_max_s": model.utility.t_max,
        "v0_kmh": cfg.v0,
        "violations": len(report),
        "hard_violations": len(report.hard_violations),
    })
    return EXIT_OK


def write_profile_csv(fh, result, segment_length: float) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["i", "position_m", "speed_kmh", "control_pct", "segment_time_s", "cum_time_s"])
    cum = 0.0
    n = len(result.u_hat)
    for i in range(n + 1):
        seg = 0.0 if i == 0 else float(result.t[i - 1])
        cum += seg
        control = repr(float(result.u_hat[i]) * 100.0) if i < n else ""
        writer.writerow([i, repr(i * segment_length), repr(float(ms_to_kmh(result.v_hat[i]))), control, repr(seg), repr(cum)])


def cmd_rollout(args) -> int:
    policy = load_policy(args.policy)
    speed = policy.grids.speed
    if args.v0 is None:
        raise ConfigError("--v0 is required")
    if not speed.lo <= args.v0 <= speed.hi:
        raise ConfigError(f"v0 = {args.v0} km/h outside speed grid [{speed.lo}, {speed.hi}]")
    # the rollout only needs segment count and length; caps are not consulted
    track = synth_track("straight", policy.n, policy.segment_length, policy.params)
    result = rollout(policy, track, policy.params, kmh_to_ms(args.v0))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_profile_csv(fh, result, policy.segment_length)
    else:
        write_profile_csv(sys.stdout, result, policy.segment_length)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    result = run_bench(cfg.nv, cfg.na, cfg.nu, cfg.repetitions, params=cfg.vehicle())
    print(format_table([result]), file=sys.stderr)
    _emit(result.as_dict())
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    cfg = _config(args)
    track = cfg.build_track()
    model = build_model(track, cfg.grids(), cfg.vehicle(), cfg.tmax)
    try:
        report = check_against_solver(
            model, kmh_to_ms(cfg.v0), cfg.backend,
            corrupt_segment=args.corrupt_segment, budget=cfg.budget,
        )
    except OracleBudgetError as exc:
        print(f"oracle-check: {exc}", file=sys.stderr)
        return EXIT_USAGE
    record = report.as_dict()
    record["status"] = "pass" if report.passed else "fail"
    _emit(record)
    return EXIT_OK if report.passed else EXIT_RUNTIME


def cmd_synth_track(args) -> int:
    cfg = _config(args)
    track = synth_track(
        cfg.synth, cfg.n_segments, cfg.segment_length, cfg.vehicle(),
        corner_radius=cfg.corner_radius, block=cfg.block,
    )
    if cfg.out:
        write_radius_profile(cfg.out, track.positions, track.radius)
    else:
        write_radius_profile(sys.stdout, track.positions, track.radius)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speedid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the diagram, write a policy file and a JSON summary")
    _shared(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("rollout", help="roll a policy file out into a profile CSV")
    p.add_argument("policy", help="policy file written by 'solve'")
    p.add_argument("--v0", type=float, help="initial speed, km/h")
    p.add_argument("--out", help="profile CSV path (default: stdout)")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("bench", help="time dense vs zero-compressed backends on a 10-segment diagram")
    _shared(p)
    p.add_argument("--repetitions", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle-check", help="compare the solver against the brute-force DP")
    _shared(p)
    p.add_argument("--corrupt-segment", type=int, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("synth-track", help="write a synthetic radius profile CSV")
    _shared(p)
    p.set_defaults(func=cmd_synth_track)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, TrackFormatError, PolicyFormatError, FileNotFoundError, ValueError) as exc:
        print(f"speedid {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"speedid {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
