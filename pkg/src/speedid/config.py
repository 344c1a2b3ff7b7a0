"""Run configuration: defaults, flat ``key = value`` files and CLI overrides."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from typing import Optional

from .grid_model import DEFAULT_ACCEL_RANGE, DEFAULT_CONTROL_RANGE, DEFAULT_SPEED_RANGE, Grids
from .solver import canonical_backend
from .track import Track, load_radius_profile, resample, synth_track
from .vehicle import VehicleParams


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    segment_length: float = 5.0
    nv: int = 100
    na: int = 100
    nu: int = 100
    v_lo: float = DEFAULT_SPEED_RANGE[0]
    v_hi: float = DEFAULT_SPEED_RANGE[1]
    a_lo: float = DEFAULT_ACCEL_RANGE[0]
    a_hi: float = DEFAULT_ACCEL_RANGE[1]
    u_lo: float = DEFAULT_CONTROL_RANGE[0]
    u_hi: float = DEFAULT_CONTROL_RANGE[1]
    tmax: Optional[float] = None
    a_t_max: float = 16.0
    a_t_min: float = 18.0
    c_v: float = 0.0021
    a_n_max: float = 30.0
    v0: float = 100.0  # km/h
    backend: str = "sparse"
    track: Optional[str] = None
    total_length: Optional[float] = None
    synth: str = "chicane"
    n_segments: int = 20
    corner_radius: float = 30.0
    block: int = 5
    out: Optional[str] = None
    seed: int = 0
    repetitions: int = 5
    budget: int = 2_000_000

    def validate(self) -> "RunConfig":
        for name in ("nv", "na", "nu"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be >= 2")
        if self.segment_length <= 0:
            raise ConfigError("segment_length must be positive")
        if self.n_segments < 1:
            raise ConfigError("n_segments must be >= 1")
        if not self.v_lo <= self.v0 <= self.v_hi:
            raise ConfigError(f"v0 = {self.v0} km/h outside speed grid [{self.v_lo}, {self.v_hi}]")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        try:
            self.backend = canonical_backend(self.backend)
            self.vehicle()
            self.grids()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def vehicle(self) -> VehicleParams:
        return VehicleParams(self.a_t_max, self.a_t_min, self.c_v, self.a_n_max)

    def grids(self) -> Grids:
        return Grids.make(
            self.nv, self.na, self.nu,
            speed_range=(self.v_lo, self.v_hi),
            accel_range=(self.a_lo, self.a_hi),
            control_range=(self.u_lo, self.u_hi),
        )

    def build_track(self) -> Track:
        params = self.vehicle()
        if self.track:
            if not os.path.exists(self.track):
                raise FileNotFoundError(f"track file not found: {self.track}")
            profile = load_radius_profile(self.track)
            total = self.total_length if self.total_length is not None else float(profile.positions[-1])
            return resample(profile, self.segment_length, total, params)
        return synth_track(
            self.synth, self.n_segments, self.segment_length, params,
            corner_radius=self.corner_radius, block=self.block,
        )


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(name: str, raw):
    if raw is None:
        return None
    default = RunConfig.__dataclass_fields__[name].default
    kind = type(default) if default is not None else None
    if name in ("tmax", "total_length"):
        kind = float
    elif name in ("track", "out"):
        kind = str
    try:
        return kind(raw) if kind is not None else raw
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def normalize_key(key: str) -> str:
    return key.strip().replace("-", "_")


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key = normalize_key(key)
        if key not in _FIELDS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, value.strip())
    return values


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Defaults, then the config file, then non-None ``overrides``."""
    values = {}
    if path:
        if not os.path.exists(path):
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    for key, value in (overrides or {}).items():
        key = normalize_key(key)
        if key in _FIELDS and value is not None:
            values[key] = _convert(key, value)
    return dataclasses.replace(RunConfig(), **values).validate()
