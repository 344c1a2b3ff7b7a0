"""Extracted control policies and the forward rollout that turns them into a speed profile."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np

from .grid_model import SNAP_TOL, Grid, Grids
from .track import Track
from .vehicle import (
    F1,
    VehicleParams,
    acceleration,
    max_control,
    ms_to_kmh,
    segment_time,
    velocity_update,
)

MAGIC = "SPEEDID-POLICY"
FORMAT_VERSION = 1


class PolicyFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Policy:
    """Optimal control distribution per segment and speed state.

    Each ``(i, k)`` entry puts mass ``weight[i, k]`` on control index
    ``first[i, k]`` and the remainder on ``second[i, k]``; ``second`` is -1
    for deterministic entries (weight 1).
    """

    grids: Grids
    segment_length: float
    params: VehicleParams
    first: np.ndarray
    second: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        shape = (self.first.shape[0], self.grids.speed.count)
        for name in ("first", "second", "weight"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"policy array {name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def n(self) -> int:
        return self.first.shape[0]

    def mean_control(self) -> np.ndarray:
        """Expected control (fraction of full scale) per (segment, speed index)."""
        u = self.grids.control.values / 100.0
        second = np.where(self.second >= 0, self.second, self.first)
        return self.weight * u[self.first] + (1.0 - self.weight) * u[second]

    def is_deterministic(self) -> np.ndarray:
        return self.second < 0


@dataclass(frozen=True)
class RolloutResult:
    """Forward-simulated profile: ``v_hat`` at n+1 points (m/s), ``u_hat`` and ``t`` per segment."""

    v_hat: np.ndarray
    u_hat: np.ndarray
    t: np.ndarray
    total_time: float


def bracket(v_kmh: float, speed: Grid) -> tuple[int, float, float]:
    """Lower grid index and the two interpolation weights for a continuous speed."""
    pos = (v_kmh - speed.lo) / speed.step
    pos = min(max(pos, 0.0), speed.count - 1.0)
    nearest = round(pos)
    if abs(pos - nearest) < SNAP_TOL:
        pos = float(nearest)
    k = min(int(pos), speed.count - 2)
    frac = pos - k
    return k, 1.0 - frac, frac


def lap_time(result: RolloutResult) -> float:
    total = 0.0
    for t in result.t:
        total += float(t)
    return total


def rollout(policy: Policy, track: Track, params: VehicleParams | None, v0: float) -> RolloutResult:
    """Follow ``policy`` from initial speed ``v0`` (m/s) along ``track``.

    Speeds stay continuous; only the policy lookup interpolates between the
    two bracketing grid speeds.
    """
    if params is None:
        params = policy.params
    if track.n != policy.n:
        raise ValueError(f"policy has {policy.n} segments, track has {track.n}")
    speed = policy.grids.speed
    v0_kmh = ms_to_kmh(v0)
    if not (speed.lo - SNAP_TOL <= v0_kmh <= speed.hi + SNAP_TOL):
        raise ValueError(f"initial speed {v0_kmh:.4f} km/h outside grid [{speed.lo}, {speed.hi}]")
    s = track.segment_length
    means = policy.mean_control()
    v_hat = np.empty(track.n + 1)
    u_hat = np.empty(track.n)
    times = np.empty(track.n)
    v = float(v0)
    v_hat[0] = v
    for i in range(track.n):
        k, w_lo, w_hi = bracket(ms_to_kmh(v), speed)
        u = w_lo * means[i, k] + w_hi * means[i, k + 1]
        v_next = velocity_update(v, acceleration(u, v, params), s)
        u_hat[i] = u
        times[i] = segment_time(v, v_next, s)
        v_hat[i + 1] = v = v_next
    result = RolloutResult(v_hat, u_hat, times, 0.0)
    return RolloutResult(v_hat, u_hat, times, lap_time(result))


@dataclass(frozen=True)
class Violation:
    """One constraint breach.

    ``overshoot`` is in the constraint's own units (m/s for speed, control
    fraction for control). ``speed_overshoot`` expresses both kinds in m/s:
    for a control breach it is how far the speed exceeds the highest speed
    at which the applied control would be admissible.
    """

    kind: str
    index: int
    overshoot: float
    speed_overshoot: float
    slack: bool


@dataclass
class FeasibilityReport:
    violations: list[Violation] = field(default_factory=list)
    speed_step: float = 0.0

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def hard_violations(self) -> list[Violation]:
        return [v for v in self.violations if not v.slack]

    @property
    def max_speed_overshoot(self) -> float:
        return max((v.speed_overshoot for v in self.violations), default=0.0)

    def __len__(self):
        return len(self.violations)


def check_feasibility(
    result: RolloutResult,
    track: Track,
    params: VehicleParams = F1,
    speed_step: float = 0.0,
    tol: float = 1e-9,
) -> FeasibilityReport:
    """List every speed-cap and control-limit breach of a rolled-out profile.

    Breaches whose speed overshoot is within ``speed_step`` (m/s, normally
    one speed-grid step) are flagged as discretization slack.
    """
    report = FeasibilityReport(speed_step=speed_step)
    for i, (v, cap) in enumerate(zip(result.v_hat, track.v_cap)):
        over = float(v - cap)
        if over > tol:
            report.violations.append(Violation("speed", i, over, over, over <= speed_step))
    for i, u in enumerate(result.u_hat):
        v, cap = float(result.v_hat[i]), float(track.v_cap[i])
        over = abs(float(u)) - max_control(v, cap)
        if over > tol:
            v_allow = cap * max(1.0 - float(u) ** 2, 0.0) ** 0.25
            dv = v - v_allow
            report.violations.append(Violation("control", i, over, dv, dv <= speed_step))
    return report


def _grid_field(g: Grid) -> str:
    return f"{g.lo!r},{g.hi!r},{g.count}"


def _parse_grid(text: str) -> Grid:
    lo, hi, count = text.split(",")
    return Grid(float(lo), float(hi), int(count))


def save_policy(policy: Policy, dest) -> None:
    """Write the versioned text policy format to a path or text stream."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            save_policy(policy, fh)
        return
    p = policy.params
    g = policy.grids
    dest.write(f"{MAGIC}\n")
    dest.write(f"version={FORMAT_VERSION}\n")
    dest.write(f"segment_length_m={policy.segment_length!r}\n")
    dest.write(f"n_segments={policy.n}\n")
    dest.write(f"speed_grid_kmh={_grid_field(g.speed)}\n")
    dest.write(f"accel_grid_ms2={_grid_field(g.accel)}\n")
    dest.write(f"control_grid_pct={_grid_field(g.control)}\n")
    dest.write(f"vehicle={p.a_t_max!r},{p.a_t_min!r},{p.c_v!r},{p.a_n_max!r}\n")
    dest.write("---\n")
    dest.write("i,v_index,u_index,u_index2,weight\n")
    out = io.StringIO()
    for i in range(policy.n):
        for k in range(g.speed.count):
            u1 = policy.first[i, k]
            u2 = policy.second[i, k]
            if u2 < 0:
                out.write(f"{i},{k},{u1}\n")
            else:
                out.write(f"{i},{k},{u1},{u2},{float(policy.weight[i, k])!r}\n")
    dest.write(out.getvalue())


def load_policy(src) -> Policy:
    if isinstance(src, (str, os.PathLike)):
        with open(src, encoding="utf-8") as fh:
            return load_policy(fh)
    lines = src.read().splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise PolicyFormatError("not a policy file (bad magic line)")
    try:
        sep = lines.index("---")
    except ValueError:
        raise PolicyFormatError("missing header terminator") from None
    header = {}
    for line in lines[1:sep]:
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
    version = int(header.get("version", "-1"))
    if version != FORMAT_VERSION:
        raise PolicyFormatError(f"unsupported policy format version {version} (expected {FORMAT_VERSION})")
    try:
        s = float(header["segment_length_m"])
        n = int(header["n_segments"])
        grids = Grids(
            _parse_grid(header["speed_grid_kmh"]),
            _parse_grid(header["accel_grid_ms2"]),
            _parse_grid(header["control_grid_pct"]),
        )
        params = VehicleParams(*(float(x) for x in header["vehicle"].split(",")))
    except (KeyError, ValueError) as exc:
        raise PolicyFormatError(f"bad policy header: {exc}") from None
    nv = grids.speed.count
    first = np.full((n, nv), -1, dtype=np.intp)
    second = np.full((n, nv), -1, dtype=np.intp)
    weight = np.ones((n, nv))
    for lineno, line in enumerate(lines[sep + 2:], start=sep + 3):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            i, k, u1 = int(fields[0]), int(fields[1]), int(fields[2])
            first[i, k] = u1
            if len(fields) == 5:
                second[i, k] = int(fields[3])
                weight[i, k] = float(fields[4])
            elif len(fields) != 3:
                raise ValueError(f"expected 3 or 5 fields, got {len(fields)}")
        except (ValueError, IndexError) as exc:
            raise PolicyFormatError(f"line {lineno}: {exc}") from None
    if np.any(first < 0):
        raise PolicyFormatError("policy file is missing (segment, speed) rows")
    return Policy(grids, s, params, first, second, weight)
