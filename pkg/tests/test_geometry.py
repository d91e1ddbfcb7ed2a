import numpy as np
import pytest

from capasense import (ConfigurationError, angular_separation,
                       doa_from_position, polarization_vector, vector_angle,
                       wave_vector, wrap_azimuth)


def test_wave_vector_axis_cases():
    assert np.allclose(wave_vector(0.0, 0.0), [1, 0, 0])
    assert np.allclose(wave_vector(np.pi / 2, 0.0), [0, 1, 0])
    assert np.allclose(wave_vector(0.0, np.pi / 2), [0, 0, 1])


def test_wave_vector_quarter_angles():
    # direct evaluation of the three trigonometric products
    c = np.cos(np.pi / 4)
    expected = [c * c, c * c, c]
    assert np.allclose(wave_vector(np.pi / 4, np.pi / 4), expected, atol=1e-12)
    assert abs(np.linalg.norm(wave_vector(np.pi / 4, np.pi / 4)) - 1) < 1e-12


def test_wave_vector_unit_norm_everywhere():
    rng = np.random.default_rng(0)
    thetas = rng.uniform(-np.pi, np.pi, 200)
    phis = rng.uniform(-np.pi / 2, np.pi / 2, 200)
    d = wave_vector(thetas, phis)
    assert np.allclose(np.linalg.norm(d, axis=-1), 1.0, atol=1e-12)


def test_doa_from_position_zenith_convention():
    theta, phi = doa_from_position([0, 0, 50])
    assert theta == 0.0
    assert abs(phi - np.pi / 2) < 1e-12


@pytest.mark.parametrize(
    "position,expected",
    [
        # frozen from the arctangent/arcsine oracle below
        ([-16.0, -10.0, 50.0], (-2.5829933, 1.2099589)),
        ([16.0, -38.0, 40.0], (-1.1722739, 0.7702443)),
    ],
)
def test_doa_from_position_reference_targets(position, expected):
    theta, phi = doa_from_position(position)
    assert abs(theta - expected[0]) < 1e-6
    assert abs(phi - expected[1]) < 1e-6
    # oracle: the wave vector must reproduce the unit position
    p = np.asarray(position)
    assert np.allclose(wave_vector(theta, phi), p / np.linalg.norm(p), atol=1e-12)


def test_doa_from_position_zero_rejected():
    with pytest.raises(ConfigurationError):
        doa_from_position([0, 0, 0])


def test_polarization_vector_cases():
    assert np.allclose(polarization_vector([1, 0, 0], [0, 0, 1]), [1, 0, 0])
    assert np.allclose(polarization_vector([0, 0, 1], [0, 0, 1]), [0, 0, 0])
    v = polarization_vector([0, 0, 1], [0, 0.6, 0.8])
    assert np.allclose(v, [0, -0.48, 0.36], atol=1e-12)
    assert abs(np.linalg.norm(v) - 0.6) < 1e-12


def test_polarization_transversality_and_energy():
    rng = np.random.default_rng(1)
    for _ in range(100):
        q = rng.standard_normal(3)
        z = rng.standard_normal(3)
        q /= np.linalg.norm(q)
        z /= np.linalg.norm(z)
        v = polarization_vector(q, z)
        assert abs(z @ v) < 1e-12
        assert abs(np.linalg.norm(v) ** 2 + (z @ q) ** 2 - 1.0) < 1e-12


def test_wrap_azimuth():
    assert abs(wrap_azimuth(np.pi + 0.1) - (-np.pi + 0.1)) < 1e-12
    assert wrap_azimuth(np.pi) == np.pi
    assert abs(wrap_azimuth(-np.pi) - np.pi) < 1e-12


def test_angular_separation():
    assert abs(angular_separation((0, 0), (np.pi / 2, 0)) - np.pi / 2) < 1e-12
    assert angular_separation((0.3, 0.2), (0.3, 0.2)) < 1e-12


def test_vector_angle_sign_fold():
    u = np.array([1.0, 0, 0])
    assert abs(vector_angle(u, -u) - np.pi) < 1e-12
    assert vector_angle(u, -u, fold_sign=True) < 1e-12
    with pytest.raises(ValueError):
        vector_angle(u, [0, 0, 0])
