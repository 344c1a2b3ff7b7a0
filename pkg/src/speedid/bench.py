"""Wall-clock comparison of the dense and zero-compressed backends."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

from .grid_model import Grids
from .solver import DiagramModel, build_model, solve_model
from .track import Track, synth_track
from .vehicle import F1, VehicleParams

BENCH_SEGMENTS = 10


@dataclass(frozen=True)
class BenchResult:
    sizes: tuple[int, int, int]
    dense: list[float]
    sparse: list[float]

    @property
    def dense_s(self) -> float:
        return statistics.median(self.dense) if self.dense else float("nan")

    @property
    def sparse_s(self) -> float:
        return statistics.median(self.sparse)

    @property
    def ratio(self) -> float:
        return self.dense_s / self.sparse_s

    def as_dict(self) -> dict:
        nv, na, nu = self.sizes
        return {
            "nv": nv, "na": na, "nu": nu,
            "repetitions": len(self.sparse),
            "sparse_s": self.sparse_s,
            # null when the dense backend was skipped
            "dense_s": self.dense_s if self.dense else None,
            "ratio": self.ratio if self.dense else None,
        }


def bench_track(s: float = 5.0, params: VehicleParams = F1) -> Track:
    return synth_track("chicane", BENCH_SEGMENTS, s, params, corner_radius=30.0, block=3)


def time_backend(model: DiagramModel, backend: str, repetitions: int) -> list[float]:
    """Backward-pass wall time per repetition; model construction is excluded."""
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        solve_model(model, backend)
        times.append(time.perf_counter() - start)
    return times


def run_bench(
    nv: int,
    na: int,
    nu: int,
    repetitions: int = 5,
    track: Track | None = None,
    params: VehicleParams = F1,
    dense: bool = True,
) -> BenchResult:
    grids = Grids.make(nv, na, nu)
    model = build_model(track or bench_track(params=params), grids, params)
    sparse_t = time_backend(model, "sparse", repetitions)
    dense_t = time_backend(model, "dense", repetitions) if dense else []
    return BenchResult((nv, na, nu), dense_t, sparse_t)


def format_table(results: list[BenchResult]) -> str:
    lines = [f"{'|V|':>5} {'|A|':>5} {'|U|':>5} {'sparse [s]':>11} {'dense [s]':>11} {'ratio':>7}"]
    for r in results:
        nv, na, nu = r.sizes
        lines.append(f"{nv:>5} {na:>5} {nu:>5} {r.sparse_s:>11.4f} {r.dense_s:>11.4f} {r.ratio:>7.1f}")
    return "\n".join(lines)
