import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from speedid.vehicle import (
    F1,
    VehicleParams,
    acceleration,
    kmh_to_ms,
    max_control,
    max_corner_speed,
    ms_to_kmh,
    segment_time,
    velocity_update,
)

speeds = st.floats(0.0, 120.0)
controls = st.floats(-1.0, 1.0)


def test_velocity_update_full_throttle_from_200_kmh():
    v = kmh_to_ms(200.0)
    a = acceleration(1.0, v, F1)
    assert a == pytest.approx(9.52, abs=0.005)
    assert ms_to_kmh(velocity_update(v, a, 1.0)) == pytest.approx(200.6159, abs=1e-4)


def test_velocity_update_trivial_cases():
    assert velocity_update(10.0, 0.0, 5.0) == 10.0
    assert velocity_update(1.0, -5.0, 1.0) == 0.0


def test_segment_time_examples():
    v = kmh_to_ms(100.0)
    assert segment_time(v, v, 1.0) == pytest.approx(0.036)
    assert segment_time(10.0, 10.0, 10.0) == 1.0
    assert segment_time(0.0, 20.0, 5.0) == 0.5


def test_segment_time_stalled_is_infinite():
    assert math.isinf(segment_time(0.0, 0.0, 5.0))


def test_acceleration_examples():
    # the published value 1.2 is this rounded
    assert acceleration(0.25, kmh_to_ms(131.0), F1) == pytest.approx(1.2193, abs=1e-4)
    assert acceleration(0.0, 0.0, F1) == 0.0


def test_terminal_velocity_is_root_of_full_throttle_acceleration():
    root = brentq(lambda v: acceleration(1.0, v, F1), 1.0, 200.0, xtol=1e-12)
    assert F1.terminal_velocity == pytest.approx(root, abs=1e-9)
    assert F1.terminal_velocity == pytest.approx(87.287, abs=1e-3)
    assert acceleration(1.0, F1.terminal_velocity, F1) == pytest.approx(0.0, abs=1e-12)


def test_max_corner_speed():
    assert ms_to_kmh(max_corner_speed(30.0, F1)) == pytest.approx(108.0, abs=1e-12)
    assert ms_to_kmh(max_corner_speed(500.0, F1)) == pytest.approx(441.0, abs=0.1)
    assert max_corner_speed(1.0 / 30.0, F1) == pytest.approx(1.0)


def test_max_control_examples():
    assert max_control(50.0, 50.0) == 0.0
    assert max_control(0.0, 50.0) == 1.0
    assert max_control(25.0, 50.0) == pytest.approx(math.sqrt(1 - 1 / 16))
    assert max_control(60.0, 50.0) == 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        VehicleParams(a_t_max=0.0)
    with pytest.raises(ValueError):
        VehicleParams(c_v=-1.0)


@given(speeds, speeds, st.floats(-30, 20), st.floats(-30, 20), st.floats(0.5, 20))
def test_velocity_update_monotone(v1, v2, a1, a2, s):
    lo_v, hi_v = sorted((v1, v2))
    lo_a, hi_a = sorted((a1, a2))
    assert velocity_update(lo_v, lo_a, s) <= velocity_update(hi_v, lo_a, s)
    assert velocity_update(lo_v, lo_a, s) <= velocity_update(lo_v, hi_a, s)


@given(st.floats(0.01, 200.0), st.floats(0.1, 50.0))
def test_uniform_motion_time(v, s):
    assert segment_time(v, v, s) == s / v


@given(controls, speeds, speeds)
def test_acceleration_decreasing_in_speed(u, v1, v2):
    lo, hi = sorted((v1, v2))
    if hi - lo > 1e-6:
        assert acceleration(u, hi, F1) < acceleration(u, lo, F1)


@given(controls, controls, speeds)
def test_acceleration_increasing_in_control(u1, u2, v):
    lo, hi = sorted((u1, u2))
    if hi - lo > 1e-6:
        assert acceleration(hi, v, F1) > acceleration(lo, v, F1)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(1.0, 150.0))
def test_max_control_decreasing(f1, f2, cap):
    lo, hi = sorted((f1, f2))
    if hi - lo > 1e-6:
        assert max_control(hi * cap, cap) < max_control(lo * cap, cap)


@given(st.floats(0.0, 1000.0))
def test_unit_round_trip(v):
    back = ms_to_kmh(kmh_to_ms(v))
    assert abs(back - v) <= 2 * math.ulp(v)
