import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from risloc.arrays import (
    SPEED_OF_LIGHT,
    ArrayKind,
    ArraySpec,
    Pose,
    array_response,
    direction_angles,
    element_positions,
    steering_matrix,
    to_global_azimuth,
    to_local_azimuth,
    unit_direction,
    wave_vector,
    wrap_angle,
)
from risloc.errors import InvalidArgumentError

angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


def test_wave_vector_norm_at_3_5_ghz():
    wavelength = SPEED_OF_LIGHT / 3.5e9
    k = wave_vector(0.3, 0.2, wavelength)
    assert k.norm == pytest.approx(2 * np.pi / wavelength)
    assert k.norm == pytest.approx(73.3, abs=0.1)


def test_wave_vector_rejects_bad_wavelength():
    with pytest.raises(InvalidArgumentError):
        wave_vector(0.0, 0.0, 0.0)


def test_ula_endfire_response_alternates():
    spec = ArraySpec(ArrayKind.ULA, 4)
    response = array_response(spec, 0.0, 0.0, 0.1)
    np.testing.assert_allclose(response, [1, -1, 1, -1], atol=1e-12)


def test_ula_broadside_response_is_all_ones():
    spec = ArraySpec(ArrayKind.ULA, 8)
    np.testing.assert_allclose(array_response(spec, np.pi / 2, 0.0, 1.0), np.ones(8), atol=1e-12)


@given(azimuth=angles, elevation=st.floats(min_value=-1.5, max_value=1.5))
def test_response_is_unit_modulus(azimuth, elevation):
    spec = ArraySpec(ArrayKind.URA, 3, 2)
    response = array_response(spec, azimuth, elevation, 1.0)
    assert response.shape == (6,)
    np.testing.assert_allclose(np.abs(response), 1.0)


def test_ura_elements_are_row_major():
    spec = ArraySpec(ArrayKind.URA, 3, 2, spacing=0.5)
    positions = element_positions(spec, 2.0)
    # horizontal index fastest, rows stacked along z
    np.testing.assert_allclose(positions[:, 0], [0, 1, 2, 0, 1, 2])
    np.testing.assert_allclose(positions[:, 2], [0, 0, 0, 1, 1, 1])
    np.testing.assert_allclose(positions[:, 1], 0.0)


def test_ura_vertical_phase_follows_elevation():
    spec = ArraySpec(ArrayKind.URA, 2, 2)
    response = array_response(spec, np.pi / 2, np.pi / 2, 1.0)
    np.testing.assert_allclose(response, [1, 1, -1, -1], atol=1e-12)


def test_element_positions_follow_pose():
    spec = ArraySpec(ArrayKind.ULA, 3, pose=Pose((1.0, 2.0, 0.5), np.pi / 2))
    positions = element_positions(spec, 1.0)
    np.testing.assert_allclose(positions, [[1.0, 2.0, 0.5], [1.0, 2.5, 0.5], [1.0, 3.0, 0.5]], atol=1e-12)


def test_steering_matrix_columns_match_responses():
    spec = ArraySpec(ArrayKind.ULA, 5)
    azimuths = np.radians([10.0, 60.0, 135.0])
    matrix = steering_matrix(spec, azimuths, 0.0, 1.0)
    assert matrix.shape == (5, 3)
    for column, azimuth in zip(matrix.T, azimuths):
        np.testing.assert_allclose(column, array_response(spec, azimuth, 0.0, 1.0))


@given(angles)
def test_wrap_angle_range(angle):
    wrapped = wrap_angle(angle)
    assert -np.pi < wrapped <= np.pi
    assert np.cos(wrapped) == pytest.approx(np.cos(angle), abs=1e-9)
    assert np.sin(wrapped) == pytest.approx(np.sin(angle), abs=1e-9)


def test_wrap_angle_keeps_pi():
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)


@given(angles, angles)
def test_local_global_round_trip(azimuth, yaw):
    pose = Pose(yaw=yaw)
    back = to_global_azimuth(to_local_azimuth(azimuth, pose), pose)
    assert abs(wrap_angle(back - azimuth)) < 1e-9


@given(azimuth=angles, yaw=angles, delta=angles, elevation=st.floats(min_value=-1.0, max_value=1.0))
def test_response_is_invariant_under_joint_rotation(azimuth, yaw, delta, elevation):
    spec = ArraySpec(ArrayKind.URA, 4, 3, pose=Pose((1.0, 2.0, 0.5), yaw))
    turned = spec.at(Pose(spec.pose.position, yaw + delta))

    before = array_response(spec, to_local_azimuth(azimuth, spec.pose), elevation, 1.0)
    after = array_response(turned, to_local_azimuth(azimuth + delta, turned.pose), elevation, 1.0)
    np.testing.assert_allclose(after, before, atol=1e-9)

    relative = element_positions(spec, 1.0) - spec.pose.origin
    plane_wave = np.exp(-1j * (relative @ wave_vector(azimuth, elevation, 1.0).components))
    np.testing.assert_allclose(before, plane_wave, atol=1e-9)


def test_direction_angles_inverts_unit_direction():
    azimuth, elevation = direction_angles(unit_direction(2.0, -0.4))
    assert azimuth == pytest.approx(2.0)
    assert elevation == pytest.approx(-0.4)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": ArrayKind.ULA, "count_h": 0},
        {"kind": ArrayKind.ULA, "count_h": 4, "count_v": 2},
        {"kind": ArrayKind.URA, "count_h": 4, "count_v": 4, "spacing": 0.0},
    ],
)
def test_invalid_array_specs(kwargs):
    with pytest.raises(InvalidArgumentError):
        ArraySpec(**kwargs)


def test_pose_requires_three_coordinates():
    with pytest.raises(InvalidArgumentError):
        Pose((1.0, 2.0))
