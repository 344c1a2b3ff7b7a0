"""Time-optimal speed profiles from a discretized influence diagram."""

from .grid_model import Grid, Grids, SparseCPT, TwoPointRow
from .oracle import dp_rollout, dp_solve
from .policy import Policy, RolloutResult, check_feasibility, lap_time, rollout
from .solver import SolveResult, build_model, solve, solve_model
from .track import RadiusProfile, Track, load_radius_profile, resample, synth_track
from .vehicle import F1, VehicleParams

__all__ = [
    "F1",
    "Grid",
    "Grids",
    "Policy",
    "RadiusProfile",
    "RolloutResult",
    "SolveResult",
    "SparseCPT",
    "Track",
    "TwoPointRow",
    "VehicleParams",
    "build_model",
    "check_feasibility",
    "dp_rollout",
    "dp_solve",
    "lap_time",
    "load_radius_profile",
    "resample",
    "rollout",
    "solve",
    "solve_model",
    "synth_track",
]
