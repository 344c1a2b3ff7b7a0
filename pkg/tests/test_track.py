import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speedid.track import (
    RadiusProfile,
    TrackFormatError,
    load_radius_profile,
    random_track,
    resample,
    synth_track,
    write_radius_profile,
)
from speedid.vehicle import F1, SENTINEL_RADIUS, ms_to_kmh


def csv_bytes(body: str) -> io.BytesIO:
    return io.BytesIO(("position_m,radius_m\n" + body).encode())


def test_minimal_profile():
    prof = load_radius_profile(csv_bytes("0,10000\n100,50\n200,10000"))
    assert len(prof) == 3
    np.testing.assert_array_equal(prof.radii, [10000, 50, 10000])


def test_corner_cap_from_profile():
    prof = load_radius_profile(csv_bytes("0,30\n"))
    track = resample(prof, 5.0, 5.0, F1)
    assert ms_to_kmh(track.v_cap[0]) == pytest.approx(108.0)


def test_negative_radius_reports_line():
    with pytest.raises(TrackFormatError) as exc:
        load_radius_profile(csv_bytes("0,10000\n50,-3"))
    assert exc.value.line == 3


@pytest.mark.parametrize(
    "body, line",
    [
        ("0,10\n10,abc\n", 3),
        ("0,10\n10,20,30\n", 3),
        ("0,10\n10,20\n10,30\n", 4),
        ("5,10\n", 2),
        ("0,0\n", 2),
    ],
)
def test_malformed_rows(body, line):
    with pytest.raises(TrackFormatError) as exc:
        load_radius_profile(csv_bytes(body))
    assert exc.value.line == line


def test_bad_header():
    with pytest.raises(TrackFormatError):
        load_radius_profile(io.BytesIO(b"pos,rad\n0,1\n"))


def test_crlf_bom_and_sentinel_clamp():
    data = "﻿position_m,radius_m\r\n0,50000\r\n10,40\r\n".encode("utf-8")
    prof = load_radius_profile(io.BytesIO(data))
    np.testing.assert_array_equal(prof.radii, [SENTINEL_RADIUS, 40.0])


def test_text_stream_and_path(tmp_path):
    path = tmp_path / "t.csv"
    write_radius_profile(path, [0.0, 10.0], [30.0, 60.0])
    assert len(load_radius_profile(path)) == 2
    assert len(load_radius_profile(io.StringIO(path.read_text()))) == 2


def test_resample_bridge_circuit_segment_count():
    prof = RadiusProfile(np.array([0.0, 5049.0]), np.array([100.0, 100.0]))
    track = resample(prof, 5.0, 5049.0)
    # 1010 discretization points, i.e. 1009 whole segments with the 4 m tail dropped
    assert len(track.radius) == 1010
    assert track.n == 1009


def test_resample_linear_midpoint():
    prof = RadiusProfile(np.array([0.0, 100.0]), np.array([100.0, 200.0]))
    track = resample(prof, 50.0, 100.0)
    assert track.radius[1] == 150.0


def test_resample_constant_and_extrapolation():
    prof = RadiusProfile(np.array([0.0, 20.0]), np.array([80.0, 80.0]))
    track = resample(prof, 5.0, 100.0)
    assert np.all(track.v_cap == track.v_cap[0])


def test_resample_empty_profile():
    with pytest.raises(TrackFormatError):
        resample(RadiusProfile(np.array([]), np.array([])), 5.0, 10.0)


@given(
    st.lists(st.floats(1.0, 10_000.0), min_size=2, max_size=30),
    st.floats(0.5, 20.0),
)
def test_resample_idempotent(radii, s):
    positions = np.arange(len(radii)) * s
    prof = RadiusProfile(positions, np.array(radii))
    track = resample(prof, s, positions[-1])
    again = resample(RadiusProfile(track.positions, track.radius), s, track.length)
    np.testing.assert_array_equal(track.radius, radii)
    np.testing.assert_array_equal(again.radius, track.radius)


@given(st.lists(st.floats(1.0, 10_000.0), min_size=2, max_size=30), st.randoms())
def test_cap_is_pointwise(radii, rnd):
    perm = list(range(len(radii)))
    rnd.shuffle(perm)
    a = synth_track("straight", 1, 1.0).from_radii(radii, 1.0)
    b = a.from_radii(np.array(radii)[perm], 1.0)
    np.testing.assert_array_equal(b.v_cap[np.argsort(perm)], a.v_cap)


def test_synth_tracks():
    straight = synth_track("straight", 10, 5.0)
    assert straight.n == 10
    assert np.allclose(straight.v_cap, np.sqrt(30 * 10_000))
    circle = synth_track("circle", 10, 5.0, corner_radius=30.0)
    assert np.allclose(ms_to_kmh(circle.v_cap), 108.0)
    chicane = synth_track("chicane", 19, 5.0, corner_radius=30.0, block=5)
    expected = np.where((np.arange(20) // 5) % 2 == 1, 30.0, np.sqrt(300_000.0))
    np.testing.assert_allclose(chicane.v_cap, expected)
    with pytest.raises(ValueError):
        synth_track("oval", 3, 1.0)
    with pytest.raises(ValueError):
        synth_track("straight", 0, 1.0)


def test_random_track_reproducible():
    a = random_track(np.random.default_rng(3), 10, 5.0)
    b = random_track(np.random.default_rng(3), 10, 5.0)
    np.testing.assert_array_equal(a.radius, b.radius)
