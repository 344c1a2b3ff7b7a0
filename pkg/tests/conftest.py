import numpy as np
import pytest

from speedid.grid_model import Grids
from speedid.track import random_track
from speedid.vehicle import kmh_to_ms

ACCEPTANCE_LINES = []


def random_fixture(seed: int):
    """Random corner track (n <= 20) with grids of at most 30 states and a feasible start speed.

    The start speed is a speed-grid value no higher than the lowest cap on
    the track, so a cap-respecting trajectory always exists.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 21))
    nv, na, nu = (int(x) for x in rng.integers(5, 31, size=3))
    grids = Grids.make(nv, na, nu)
    track = random_track(rng, n, float(rng.uniform(2.0, 20.0)))
    speeds = grids.speed.values
    ok = np.nonzero(kmh_to_ms(speeds) <= track.v_cap.min())[0]
    v0 = kmh_to_ms(speeds[int(rng.choice(ok))])
    return track, grids, v0


FIXTURE_SEEDS = list(range(12))


@pytest.fixture(params=FIXTURE_SEEDS, ids=lambda s: f"seed{s}")
def random_case(request):
    return random_fixture(request.param)


@pytest.fixture
def acceptance():
    def record(criterion, passed, detail):
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        line = f"[criterion {criterion}] {status}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
