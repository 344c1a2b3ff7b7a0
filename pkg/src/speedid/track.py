"""Radius profiles, equal-length segmentation and speed caps."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import IO, Union

import numpy as np

from .vehicle import F1, SENTINEL_RADIUS, VehicleParams, max_corner_speed

HEADER = ("position_m", "radius_m")


class TrackFormatError(ValueError):
    """Malformed or invalid radius-profile input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class RadiusProfile:
    positions: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        rad = np.asarray(self.radii, dtype=float)
        if pos.shape != rad.shape or pos.ndim != 1:
            raise TrackFormatError("positions and radii must be 1-d arrays of equal length")
        if len(pos) and pos[0] != 0:
            raise TrackFormatError("positions must start at 0")
        if np.any(np.diff(pos) <= 0):
            raise TrackFormatError("positions must be strictly increasing")
        if np.any(rad <= 0):
            raise TrackFormatError("radii must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "radii", rad)

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class Track:
    """Open path of ``n`` segments of length ``segment_length``.

    ``radius`` and ``v_cap`` (m/s) are given at the ``n + 1`` path points.
    """

    segment_length: float
    radius: np.ndarray
    v_cap: np.ndarray

    def __post_init__(self):
        if self.segment_length <= 0:
            raise ValueError("segment length must be positive")
        if len(self.radius) < 2 or len(self.radius) != len(self.v_cap):
            raise ValueError("a track needs n >= 1 segments and one cap per point")

    @property
    def n(self) -> int:
        return len(self.radius) - 1

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.segment_length

    @property
    def length(self) -> float:
        return self.n * self.segment_length

    @classmethod
    def from_radii(cls, radius, segment_length: float, params: VehicleParams = F1) -> "Track":
        radius = np.asarray(radius, dtype=float)
        return cls(segment_length, radius, max_corner_speed(radius, params))


def load_radius_profile(source: Union[str, os.PathLike, IO]) -> RadiusProfile:
    """Parse a ``position_m,radius_m`` CSV from a path, text or byte stream.

    Radii above the straight-section sentinel are clamped to it.

    Raises:
        TrackFormatError: On a bad header, unparsable row, non-increasing
            position or non-positive radius. Line numbers count the header
            as line 1.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return load_radius_profile(fh)
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    else:
        data = data.lstrip("\ufeff")
    reader = csv.reader(io.StringIO(data, newline=""))
    positions: list[float] = []
    radii: list[float] = []
    header_seen = False
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if not header_seen:
            if tuple(c.strip() for c in row) != HEADER:
                raise TrackFormatError(f"expected header {','.join(HEADER)!r}", line)
            header_seen = True
            continue
        if len(row) != 2:
            raise TrackFormatError(f"expected 2 fields, got {len(row)}", line)
        try:
            pos, rad = float(row[0]), float(row[1])
        except ValueError:
            raise TrackFormatError(f"cannot parse {','.join(row)!r}", line) from None
        if not (math.isfinite(pos) and math.isfinite(rad)):
            raise TrackFormatError("non-finite value", line)
        if not positions and pos != 0:
            raise TrackFormatError("first position must be 0", line)
        if positions and pos <= positions[-1]:
            raise TrackFormatError("positions must be strictly increasing", line)
        if rad <= 0:
            raise TrackFormatError(f"radius must be positive, got {rad}", line)
        positions.append(pos)
        radii.append(min(rad, SENTINEL_RADIUS))
    if not header_seen:
        raise TrackFormatError("empty input")
    return RadiusProfile(np.array(positions), np.array(radii))


def write_radius_profile(path_or_file, positions, radii) -> None:
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            write_radius_profile(fh, positions, radii)
        return
    writer = csv.writer(path_or_file, lineterminator="\n")
    writer.writerow(HEADER)
    for p, r in zip(positions, radii):
        writer.writerow([repr(float(p)), repr(float(r))])


def resample(
    profile: RadiusProfile,
    s: float,
    total_length: float,
    params: VehicleParams = F1,
) -> Track:
    """Cut the path into ``floor(total_length / s)`` segments of length ``s``.

    Radii at the segment points come from linear interpolation of the
    profile, held constant beyond its last sample. A trailing partial
    segment is dropped.
    """
    if len(profile) == 0:
        raise TrackFormatError("empty radius profile")
    if s <= 0:
        raise ValueError("segment length must be positive")
    if total_length < s:
        raise ValueError("total length shorter than one segment")
    # tolerate float noise such as 0.3 / 0.1 = 2.9999999999999996
    n = int(math.floor(total_length / s + 1e-9))
    points = np.arange(n + 1) * s
    radius = np.interp(points, profile.positions, profile.radii)
    return Track.from_radii(radius, s, params)


def synth_track(
    kind: str,
    n: int,
    s: float,
    params: VehicleParams = F1,
    corner_radius: float = 30.0,
    block: int = 5,
) -> Track:
    """Synthetic test tracks: ``straight``, ``circle`` or ``chicane``.

    A chicane alternates ``block`` straight points with ``block`` corner
    points, starting with a straight.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "straight":
        radius = np.full(n + 1, SENTINEL_RADIUS)
    elif kind == "circle":
        radius = np.full(n + 1, float(corner_radius))
    elif kind == "chicane":
        if block < 1:
            raise ValueError("block must be >= 1")
        corner = (np.arange(n + 1) // block) % 2 == 1
        radius = np.where(corner, float(corner_radius), SENTINEL_RADIUS)
    else:
        raise ValueError(f"unknown track kind {kind!r}")
    return Track.from_radii(radius, s, params)


def random_track(
    rng: np.random.Generator,
    n: int,
    s: float,
    params: VehicleParams = F1,
    corner_prob: float = 0.3,
    radius_range: tuple[float, float] = (15.0, 200.0),
) -> Track:
    """Straight track with corners of random radius at random points."""
    corner = rng.random(n + 1) < corner_prob
    radii = rng.uniform(*radius_range, size=n + 1)
    radius = np.where(corner, radii, SENTINEL_RADIUS)
    return Track.from_radii(radius, s, params)
