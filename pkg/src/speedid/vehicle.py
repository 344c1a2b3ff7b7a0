"""Point-mass vehicle physics in SI units.

Speeds are m/s, accelerations m/s^2, lengths m, times s. Controls are
dimensionless in [-1, 1]; the percent form only appears at I/O boundaries.
All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KMH_PER_MS = 3.6

#: Radius used for straight sections; its speed cap sits far above any grid.
SENTINEL_RADIUS = 10_000.0


def kmh_to_ms(v):
    return v / KMH_PER_MS


def ms_to_kmh(v):
    return v * KMH_PER_MS


@dataclass(frozen=True)
class VehicleParams:
    """Engine, brake, drag and grip constants of the point-mass model.

    Attributes:
        a_t_max: Maximum tangential acceleration, m/s^2.
        a_t_min: Maximum tangential deceleration magnitude, m/s^2.
        c_v: Aerodynamic drag deceleration coefficient, 1/m.
        a_n_max: Maximum lateral acceleration, m/s^2.
    """

    a_t_max: float = 16.0
    a_t_min: float = 18.0
    c_v: float = 0.0021
    a_n_max: float = 30.0

    def __post_init__(self):
        if not (self.a_t_max > 0 and self.a_t_min > 0 and self.a_n_max > 0):
            raise ValueError(f"accelerations must be positive: {self}")
        if self.c_v < 0:
            raise ValueError(f"drag coefficient must be non-negative: {self.c_v}")

    @property
    def terminal_velocity(self) -> float:
        """Full-throttle speed at which thrust balances drag (m/s)."""
        if self.c_v == 0:
            return math.inf
        return math.sqrt(self.a_t_max / self.c_v)


F1 = VehicleParams()


def velocity_update(v, a, s):
    """Speed after covering length ``s`` at constant acceleration ``a``.

    Over-braking (negative discriminant) clamps to rest.
    """
    disc = np.square(v) + 2.0 * s * np.asarray(a, dtype=float)
    out = np.sqrt(np.maximum(disc, 0.0))
    return float(out) if np.ndim(out) == 0 else out


def segment_time(v_in, v_out, s):
    """Time to cover a segment of length ``s`` between two point speeds.

    A stalled segment (both speeds zero) takes infinite time.
    """
    mean = (np.asarray(v_in, dtype=float) + v_out) / 2.0
    with np.errstate(divide="ignore"):
        out = np.where(mean > 0, s / np.where(mean > 0, mean, 1.0), np.inf)
    return float(out) if np.ndim(out) == 0 else out


def acceleration(u, v, p: VehicleParams = F1):
    """Longitudinal acceleration for control ``u`` in [-1, 1] at speed ``v``."""
    u = np.asarray(u, dtype=float)
    thrust = np.where(u >= 0, p.a_t_max * u, p.a_t_min * u)
    out = thrust - p.c_v * np.square(v)
    return float(out) if np.ndim(out) == 0 else out


def max_corner_speed(r, p: VehicleParams = F1):
    """Grip-limited speed on an arc of radius ``r``."""
    out = np.sqrt(p.a_n_max * np.asarray(r, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def max_control(v, v_max):
    """Largest admissible |u| at speed ``v`` under cap ``v_max``.

    Speeds above the cap get zero authority rather than an imaginary root.
    """
    ratio = np.asarray(v, dtype=float) / v_max
    out = np.sqrt(np.maximum(1.0 - ratio**4, 0.0))
    out = np.where(ratio > 1.0, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out
