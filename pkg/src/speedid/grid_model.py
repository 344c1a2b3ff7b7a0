"""Discretized influence-diagram ingredients.

Uniform grids over speed (km/h), acceleration (m/s^2) and control (percent);
two-point interpolated conditional probability tables; segment utilities;
speed-cap likelihood vectors and control admissibility bounds.

Physics calls always receive SI values; the speed grid is kept in km/h so
tables line up with the published ranges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vehicle import (
    F1,
    VehicleParams,
    acceleration,
    kmh_to_ms,
    max_control,
    ms_to_kmh,
    segment_time,
    velocity_update,
)

# Fractional grid positions this close to an integer count as on-grid.
SNAP_TOL = 1e-9

# Slack (percent units) when testing |u| <= u_max; absorbs rounding in u_max.
ADMISSIBLE_TOL = 1e-9

DEFAULT_SPEED_RANGE = (0.0, 400.0)
DEFAULT_ACCEL_RANGE = (-34.0, 16.0)
DEFAULT_CONTROL_RANGE = (-100.0, 100.0)
MIN_RACE_SPEED_KMH = 100.0


@dataclass(frozen=True)
class Grid:
    """Uniform grid with inclusive endpoints."""

    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.count}")
        if not self.hi > self.lo:
            raise ValueError(f"empty grid range [{self.lo}, {self.hi}]")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)

    @property
    def values(self) -> np.ndarray:
        return self.lo + np.arange(self.count) * self.step

    def __len__(self):
        return self.count


@dataclass(frozen=True)
class Grids:
    speed: Grid
    accel: Grid
    control: Grid

    @classmethod
    def make(
        cls,
        nv: int,
        na: int,
        nu: int,
        speed_range=DEFAULT_SPEED_RANGE,
        accel_range=DEFAULT_ACCEL_RANGE,
        control_range=DEFAULT_CONTROL_RANGE,
    ) -> "Grids":
        return cls(Grid(*speed_range, nv), Grid(*accel_range, na), Grid(*control_range, nu))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.speed.count, self.accel.count, self.control.count


@dataclass(frozen=True)
class TwoPointRow:
    """Distribution with mass ``weight`` on ``lower_index`` and the rest on the next index."""

    lower_index: int
    weight: float

    def probabilities(self, count: int) -> np.ndarray:
        p = np.zeros(count)
        p[self.lower_index] = self.weight
        if self.weight < 1.0:
            p[self.lower_index + 1] = 1.0 - self.weight
        return p


@dataclass(frozen=True)
class SparseCPT:
    """Zero-compressed conditional table: two numbers per parent configuration.

    ``index[cfg]`` is the first child state with non-zero probability,
    ``weight[cfg]`` its probability; ``1 - weight[cfg]`` sits on
    ``index[cfg] + 1``.
    """

    index: np.ndarray
    weight: np.ndarray
    child_count: int

    @property
    def parent_shape(self) -> tuple[int, ...]:
        return self.index.shape

    def row(self, *cfg: int) -> TwoPointRow:
        return TwoPointRow(int(self.index[cfg]), float(self.weight[cfg]))

    def to_dense(self) -> np.ndarray:
        """Full table with the child variable on the last axis."""
        dense = np.zeros(self.parent_shape + (self.child_count,))
        idx = self.index[..., None]
        np.put_along_axis(dense, idx, self.weight[..., None], axis=-1)
        upper = np.minimum(self.index + 1, self.child_count - 1)[..., None]
        rest = (1.0 - self.weight)[..., None]
        # weight == 1 rows have no upper entry; adding zero there is harmless
        np.put_along_axis(
            dense, upper, np.take_along_axis(dense, upper, axis=-1) + rest, axis=-1
        )
        return dense

    def mean(self, child_values: np.ndarray) -> np.ndarray:
        padded = np.append(child_values, 0.0)
        return self.weight * padded[self.index] + (1.0 - self.weight) * padded[self.index + 1]


@dataclass(frozen=True)
class UtilityTable:
    """Time savings ``t_max - t`` per (entry speed index, exit speed index), floored at 0."""

    values: np.ndarray
    t_max: float


def project(x, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized two-point projection; returns ``(lower_index, weight)`` arrays.

    Values outside the grid clamp to the nearest endpoint with weight 1.
    """
    t = (np.asarray(x, dtype=float) - grid.lo) / grid.step
    t = np.clip(t, 0.0, grid.count - 1)
    nearest = np.rint(t)
    t = np.where(np.abs(t - nearest) < SNAP_TOL, nearest, t)
    k = np.floor(t).astype(np.intp)
    frac = t - k
    top = k >= grid.count - 1
    k = np.where(top, grid.count - 1, k)
    weight = np.where(top, 1.0, 1.0 - frac)
    return k, weight


def project_two_point(x: float, grid: Grid) -> TwoPointRow:
    k, w = project(x, grid)
    return TwoPointRow(int(k), float(w))


def build_accel_cpt(grids: Grids, p: VehicleParams = F1) -> SparseCPT:
    """P(A | V, U) with parents laid out as ``(speed index, control index)``."""
    v = kmh_to_ms(grids.speed.values)[:, None]
    u = grids.control.values[None, :] / 100.0
    k, w = project(acceleration(u, v, p), grids.accel)
    return SparseCPT(k, w, grids.accel.count)


def build_speed_cpt(grids: Grids, s: float) -> SparseCPT:
    """P(V' | V, A) with parents laid out as ``(speed index, accel index)``."""
    if s <= 0:
        raise ValueError("segment length must be positive")
    v = kmh_to_ms(grids.speed.values)[:, None]
    a = grids.accel.values[None, :]
    k, w = project(ms_to_kmh(velocity_update(v, a, s)), grids.speed)
    return SparseCPT(k, w, grids.speed.count)


def default_t_max(s: float) -> float:
    """Segment time at the minimal race speed of 100 km/h."""
    return s / kmh_to_ms(MIN_RACE_SPEED_KMH)


def build_utility(speed: Grid, s: float, t_max: float | None = None) -> UtilityTable:
    if t_max is None:
        t_max = default_t_max(s)
    v = kmh_to_ms(speed.values)
    t = segment_time(v[:, None], v[None, :], s)
    return UtilityTable(np.maximum(t_max - t, 0.0), t_max)


def speed_likelihood(v_max: float, speed: Grid) -> np.ndarray:
    """Soft speed-cap evidence over the speed grid; ``v_max`` in m/s."""
    cap = ms_to_kmh(v_max)
    v = speed.values
    phi = (v <= cap).astype(float)
    above = np.nonzero(v > cap)[0]
    if len(above):
        k = above[0]
        phi[k] = max(0.0, 1.0 - (v[k] - cap) / speed.step)
    return phi


def control_bound(speed: Grid, v_cap: float) -> np.ndarray:
    """Admissible |u| in percent for every speed state under cap ``v_cap`` (m/s)."""
    return 100.0 * max_control(kmh_to_ms(speed.values), v_cap)


def control_rank(control: Grid) -> np.ndarray:
    """Tie-break rank of each control state: smaller |u| first, then negative sign."""
    u = control.values
    order = np.lexsort((u >= 0, np.abs(u)))
    rank = np.empty(len(u), dtype=np.intp)
    rank[order] = np.arange(len(u))
    return rank
