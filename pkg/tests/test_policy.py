import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speedid.grid_model import Grid, Grids
from speedid.policy import (
    Policy,
    PolicyFormatError,
    RolloutResult,
    bracket,
    check_feasibility,
    lap_time,
    load_policy,
    rollout,
    save_policy,
)
from speedid.solver import solve
from speedid.track import Track, synth_track
from speedid.vehicle import F1, acceleration, kmh_to_ms, ms_to_kmh, velocity_update


def constant_policy(grids, n, u_index, s=5.0):
    nv = grids.speed.count
    first = np.full((n, nv), u_index, dtype=np.intp)
    return Policy(grids, s, F1, first, np.full((n, nv), -1, dtype=np.intp), np.ones((n, nv)))


def test_rollout_at_terminal_velocity_holds_speed():
    grids = Grids.make(401, 51, 101)
    track = synth_track("straight", 20, 5.0)
    policy = solve(track, grids).policy
    vt = F1.terminal_velocity
    res = rollout(policy, track, F1, vt)
    assert np.all(res.u_hat > 0.99)
    step = kmh_to_ms(grids.speed.step)
    assert np.all(np.abs(res.v_hat - vt) <= step)


def test_rollout_on_grid_uses_single_row():
    grids = Grids.make(401, 51, 5)
    nv = grids.speed.count
    first = np.zeros((1, nv), dtype=np.intp)
    first[0, 150] = 3  # 50%
    policy = Policy(grids, 5.0, F1, first, np.full((1, nv), -1, dtype=np.intp), np.ones((1, nv)))
    res = rollout(policy, synth_track("straight", 1, 5.0), F1, kmh_to_ms(150.0))
    assert res.u_hat[0] == 0.5
    v = kmh_to_ms(150.0)
    assert res.v_hat[1] == velocity_update(v, acceleration(0.5, v, F1), 5.0)


def test_rollout_interpolates_between_brackets():
    grids = Grids.make(5, 11, 5)  # speeds 0, 100, ...
    nv = grids.speed.count
    first = np.full((1, nv), 2, dtype=np.intp)
    first[0, 1] = 4
    policy = Policy(grids, 5.0, F1, first, np.full((1, nv), -1, dtype=np.intp), np.ones((1, nv)))
    res = rollout(policy, synth_track("straight", 1, 5.0), F1, kmh_to_ms(125.0))
    assert res.u_hat[0] == pytest.approx(0.75)


def test_rollout_mixed_entry_uses_mean_control():
    grids = Grids.make(5, 11, 5)
    nv = grids.speed.count
    first = np.full((1, nv), 3, dtype=np.intp)
    second = np.full((1, nv), 4, dtype=np.intp)
    weight = np.full((1, nv), 0.8)
    policy = Policy(grids, 5.0, F1, first, second, weight)
    res = rollout(policy, synth_track("straight", 1, 5.0), F1, kmh_to_ms(100.0))
    assert res.u_hat[0] == pytest.approx(0.8 * 0.5 + 0.2 * 1.0)


def test_rollout_errors():
    grids = Grids.make(5, 5, 5)
    policy = constant_policy(grids, 3, 2)
    with pytest.raises(ValueError):
        rollout(policy, synth_track("straight", 3, 5.0), F1, kmh_to_ms(401.0))
    with pytest.raises(ValueError):
        rollout(policy, synth_track("straight", 4, 5.0), F1, 10.0)


def test_lap_time_examples():
    v = kmh_to_ms(100.0)
    res = RolloutResult(np.full(11, v), np.zeros(10), np.full(10, 1.0 / v), 0.0)
    assert lap_time(res) == pytest.approx(0.36)
    empty = RolloutResult(np.array([v]), np.array([]), np.array([]), 0.0)
    assert lap_time(empty) == 0.0


def test_feasibility_examples():
    track = Track.from_radii(np.full(3, 30.0), 5.0)  # cap 30 m/s
    ok = RolloutResult(np.array([20.0, 20.0, 20.0]), np.zeros(2), np.ones(2), 2.0)
    assert check_feasibility(ok, track).feasible
    bad = RolloutResult(np.array([20.0, 31.0, 20.0]), np.zeros(2), np.ones(2), 2.0)
    report = check_feasibility(bad, track)
    assert len(report) == 1
    (viol,) = report.violations
    assert viol.kind == "speed" and viol.index == 1
    assert viol.overshoot == pytest.approx(1.0)
    assert not viol.slack
    assert check_feasibility(bad, track, speed_step=1.5).hard_violations == []


def test_control_violation_expressed_in_speed():
    track = Track.from_radii(np.full(2, 30.0), 5.0)
    res = RolloutResult(np.array([29.0, 29.0]), np.array([0.9]), np.ones(1), 1.0)
    report = check_feasibility(res, track)
    (viol,) = report.violations
    assert viol.kind == "control"
    v_allow = 30.0 * (1 - 0.81) ** 0.25
    assert viol.speed_overshoot == pytest.approx(29.0 - v_allow)


def test_rollout_is_deterministic(random_case):
    track, grids, v0 = random_case
    policy = solve(track, grids).policy
    a = rollout(policy, track, F1, v0)
    b = rollout(policy, track, F1, v0)
    np.testing.assert_array_equal(a.v_hat, b.v_hat)
    np.testing.assert_array_equal(a.u_hat, b.u_hat)
    assert a.total_time == b.total_time
    assert a.v_hat[0] == v0
    assert a.total_time == lap_time(a)


@given(st.floats(0.0, 400.0), st.integers(2, 500))
def test_bracket_weights(v, nv):
    speed = Grid(0.0, 400.0, nv)
    k, w_lo, w_hi = bracket(v, speed)
    assert 0 <= k < nv - 1
    assert w_lo + w_hi == pytest.approx(1.0, abs=1e-15)
    assert 0.0 <= w_hi <= 1.0
    assert w_lo * speed.values[k] + w_hi * speed.values[k + 1] == pytest.approx(v, abs=1e-9)


def test_straight_rollout_monotone():
    grids = Grids.make(201, 51, 51)
    track = synth_track("straight", 40, 5.0)
    res = rollout(solve(track, grids).policy, track, F1, kmh_to_ms(120.0))
    assert np.all(np.diff(res.v_hat) >= 0.0)
    assert ms_to_kmh(res.v_hat[-1]) > 120.0


def test_policy_file_round_trip(tmp_path, random_case):
    track, grids, _ = random_case
    policy = solve(track, grids).policy
    path = tmp_path / "p.txt"
    save_policy(policy, path)
    back = load_policy(path)
    assert back.grids == policy.grids
    assert back.params == policy.params
    assert back.segment_length == policy.segment_length
    np.testing.assert_array_equal(back.first, policy.first)
    np.testing.assert_array_equal(back.second, policy.second)
    np.testing.assert_array_equal(back.weight, policy.weight)


def test_policy_file_errors():
    policy = constant_policy(Grids.make(3, 3, 3), 1, 1)
    buf = io.StringIO()
    save_policy(policy, buf)
    text = buf.getvalue()
    with pytest.raises(PolicyFormatError, match="version"):
        load_policy(io.StringIO(text.replace("version=1", "version=2")))
    with pytest.raises(PolicyFormatError):
        load_policy(io.StringIO("hello\n"))
    with pytest.raises(PolicyFormatError):
        load_policy(io.StringIO(text + "0,1,x\n"))
    truncated = "\n".join(text.splitlines()[:-1]) + "\n"
    with pytest.raises(PolicyFormatError):
        load_policy(io.StringIO(truncated))
