import numpy as np
import pytest

import capasense as cs
from capasense import (ApertureConfig, ConfigurationError, DiscreteArrayMusic,
                       Scene, SingularFimError, Target, crlb, simulate,
                       singlepol_music, spda_config, spda_music)
from capasense.field import noiseless_node_field
from capasense.geometry import wave_vector
from capasense.search import window_grid
from capasense.signals import random_currents, snapshot_signals


def test_spda_geometry():
    config = spda_config(ApertureConfig(2, 2, 0.1))
    assert config.n_x == 40 and config.n_y == 40
    assert config.n_elements == 1600
    assert abs(config.spacing - 0.05) < 1e-15
    # positions inside the aperture footprint
    assert config.positions[:, 0].min() >= -1.0
    assert config.positions[:, 0].max() <= 1.0
    assert abs(config.effective_aperture - 0.1 ** 2 / (4 * np.pi)) < 1e-18


def test_spda_noiseless_recovers_targets():
    scene = cs.reference_scene(noise_power=0.0, snapshots=16, seed=30)
    doas = spda_music(scene, 2)
    order = np.argsort(doas.angles[:, 0])
    truth = scene.doas[np.argsort(scene.doas[:, 0])]
    assert np.abs(doas.angles[order] - truth).max() < 1e-2


def test_spda_sampling_deterministic():
    scene = cs.reference_scene(noise_power=1e-3, snapshots=8, seed=31)
    config = spda_config(scene.aperture)
    snaps = snapshot_signals(scene, random_currents(scene))
    a = cs.sample_discrete_array(scene, config, snaps)
    b = cs.sample_discrete_array(scene, config, snaps)
    assert np.array_equal(a, b)
    assert a.shape == (1600, 8)


def test_spda_estimator_api():
    from sklearn.base import clone
    est = DiscreteArrayMusic(n_targets=2)
    assert clone(est).get_params() == est.get_params()


def test_singlepol_noiseless_both_targets():
    scene = cs.reference_scene(noise_power=0.0, snapshots=16, seed=32)
    doas = singlepol_music(_field(scene), 2)
    order = np.argsort(doas.angles[:, 0])
    truth = scene.doas[np.argsort(scene.doas[:, 0])]
    assert np.abs(doas.angles[order] - truth).max() < 1e-3


def _field(scene, order=16):
    _, _, field = simulate(scene, order)
    return field


def x_blind_attitude(direction):
    """Unit attitude whose transverse component has no x projection."""
    z = direction
    e = np.array([0.0, -z[2], z[1]])
    e /= np.linalg.norm(e)
    q = (z + e) / np.sqrt(2)
    return q


def test_singlepol_misses_x_blind_target():
    # engineered v_x = 0 for target 2: the x-only pipeline cannot see it
    base = cs.reference_scene(noise_power=1e-3, snapshots=200, seed=33)
    t2_dir = base.targets[1].direction
    t2 = Target(position=base.targets[1].position, attitude=x_blind_attitude(t2_dir))
    scene = Scene(aperture=base.aperture, targets=(base.targets[0], t2),
                  noise_power=1e-3, snapshots=200, seed=33)
    assert abs(scene.targets[1].polarization[0]) < 1e-12
    field = _field(scene)
    try:
        doas = singlepol_music(field, 2)
        sep = min(
            cs.angular_separation(tuple(a), tuple(scene.doas[1]))
            for a in doas.angles
        )
        assert sep > np.deg2rad(5.0)
    except cs.UnderDetectionError:
        pass
    # tri-polarized pipeline sees both
    tri = cs.estimate_doa(field, 2)
    for truth in scene.doas:
        sep = min(
            cs.angular_separation(tuple(a), tuple(truth)) for a in tri.angles
        )
        assert sep < 1e-2


# ---------------------------------------------------------------------------
# CRLB
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def crlb_setup():
    scene = cs.reference_scene(noise_power=1e-3, snapshots=20, seed=40)
    snaps = snapshot_signals(scene, random_currents(scene))
    return scene, snaps


def test_crlb_scaling_in_noise(crlb_setup):
    scene, snaps = crlb_setup
    base = crlb(scene, snaps, order=8)
    scaled = crlb(scene.replace(noise_power=1e-2), snaps, order=8)
    assert np.allclose(scaled.theta_bounds, 10 * base.theta_bounds, rtol=1e-10)
    assert np.allclose(scaled.phi_bounds, 10 * base.phi_bounds, rtol=1e-10)


def test_crlb_scaling_in_snapshots(crlb_setup):
    scene, snaps = crlb_setup
    base = crlb(scene, snaps, order=8)
    doubled_scene = scene.replace(snapshots=40)
    doubled = crlb(
        doubled_scene,
        np.concatenate([snaps.signals, snaps.signals], axis=1),
        order=8,
    )
    assert np.allclose(doubled.theta_bounds, base.theta_bounds / 2, rtol=1e-8)
    assert np.allclose(doubled.phi_bounds, base.phi_bounds / 2, rtol=1e-8)


def test_crlb_fim_symmetric_positive(crlb_setup):
    scene, snaps = crlb_setup
    report = crlb(scene, snaps, order=8)
    fim = report.fim
    assert np.allclose(fim, fim.T, rtol=1e-6)
    assert np.all(np.linalg.eigvalsh(fim) > 0)
    assert np.all(report.theta_bounds > 0)
    assert np.all(report.phi_bounds > 0)
    assert report.attitude_bounds.shape == (2, 2)
    doc = report.to_dict()
    assert set(doc) == {
        "theta_0", "phi_0", "attitude_0_c1", "attitude_0_c2",
        "theta_1", "phi_1", "attitude_1_c1", "attitude_1_c2",
    }


def test_crlb_requires_noise(crlb_setup):
    scene, snaps = crlb_setup
    with pytest.raises(ConfigurationError):
        crlb(scene.replace(noise_power=0.0), snaps, order=8)


def test_crlb_singular_for_parallel_attitude():
    ap = ApertureConfig(2, 2, 0.1)
    direction = wave_vector(*cs.doa_from_position([10, 5, 40]))
    target = Target(position=[10, 5, 40], attitude=direction)
    scene = Scene(aperture=ap, targets=[target], noise_power=1e-3,
                  snapshots=8, seed=41)
    snaps = snapshot_signals(scene, random_currents(scene))
    with pytest.raises(SingularFimError) as err:
        crlb(scene, snaps, order=8)
    assert err.value.deficient


def test_crlb_against_analytic_derivative_oracle():
    """Finite-difference FIM vs closed-form derivatives of the mean field.

    For one target the mean is mu = s(t) a(r) v with
    a = exp(-j k r . d(theta, phi)) and v = q - (d . q) d; both factors have
    elementary derivatives in theta and phi, giving an independent FIM.
    """
    ap = ApertureConfig(2, 2, 0.1)
    target = Target(position=[-16, -10, 50], attitude=[0.8, 0.6, 0])
    scene = Scene(aperture=ap, targets=[target], noise_power=1e-3,
                  snapshots=10, seed=42)
    snaps = snapshot_signals(scene, random_currents(scene))
    order = 8
    report = crlb(scene, snaps, order=order)

    from capasense.quadrature import build_node_grid, gauss_legendre_rule
    grid = build_node_grid(ap, gauss_legendre_rule(order))
    theta, phi = scene.doas[0]
    k = ap.wavenumber
    q = target.attitude
    d = wave_vector(theta, phi)
    dd_dtheta = np.array([-np.sin(theta) * np.cos(phi),
                          np.cos(theta) * np.cos(phi), 0.0])
    dd_dphi = np.array([-np.cos(theta) * np.sin(phi),
                        -np.sin(theta) * np.sin(phi), np.cos(phi)])
    a = np.exp(-1j * k * (grid.positions @ d))
    v = q - (d @ q) * d

    def dv(ddir):
        return -(ddir @ q) * d - (d @ q) * ddir

    derivs = []
    for ddir in (dd_dtheta, dd_dphi):
        da = -1j * k * (grid.positions @ ddir) * a
        block = (
            np.einsum("n,j,t->jnt", da, v, snaps.signals[0])
            + np.einsum("n,j,t->jnt", a, dv(ddir), snaps.signals[0])
        )
        derivs.append(block.ravel())
    d_mat = np.stack(derivs, axis=1)
    fim_angles = 2 / scene.noise_power * np.real(d_mat.conj().T @ d_mat)
    assert np.allclose(report.fim[:2, :2], fim_angles, rtol=1e-5)


def test_crlb_report_bounds_consistency(crlb_setup):
    # nondegenerate scene: diagonal CRLB entries match the inverse FIM
    scene, snaps = crlb_setup
    report = crlb(scene, snaps, order=8)
    inv = np.linalg.inv(report.fim)
    assert np.allclose(np.diag(inv)[:2], report.theta_bounds, rtol=1e-12)
