"""Snapshot signals: dipole currents and their effective complex amplitudes.

The snapshot amplitude of target m at time t is

    s_m(t) = j * I_m(t) * l_m * eta / (2 * lambda * p_m) * exp(j k p_m)

with I_m(t) the dipole current, l_m the dipole length and p_m the range.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError

# RNG stream salts; children are derived as SeedSequence((seed, salt, ...)).
SALT_CURRENTS = 0x43555252
SALT_NOISE = 0x4E4F4953
SALT_UNIFORM = 0x554E4946
SALT_SPDA = 0x53504441


@dataclass(frozen=True)
class SnapshotSeries:
    """Per-target snapshot amplitudes and the underlying currents."""

    signals: np.ndarray   # (M, T) complex, s_m(t)
    currents: np.ndarray  # (M, T) complex amperes, I_m(t)

    @property
    def n_targets(self):
        return self.signals.shape[0]

    @property
    def n_snapshots(self):
        return self.signals.shape[1]


def snapshot_signals(scene, currents):
    """Build the snapshot series from dipole currents of shape (M, T)."""
    currents = np.asarray(currents, dtype=complex)
    expected = (scene.n_targets, scene.snapshots)
    if currents.shape != expected:
        raise ConfigurationError(
            f"currents must have shape {expected}, got {currents.shape}"
        )
    lam = scene.aperture.wavelength
    k = scene.aperture.wavenumber
    eta = scene.aperture.impedance
    ranges = np.array([t.range for t in scene.targets])
    lengths = np.array([t.length for t in scene.targets])
    gain = 1j * lengths * eta / (2.0 * lam * ranges) * np.exp(1j * k * ranges)
    return SnapshotSeries(signals=gain[:, None] * currents, currents=currents)


def random_currents(scene, kind="unit_phase", rng=None):
    """Draw dipole currents of shape (M, T).

    ``unit_phase`` (default): unit magnitude, i.i.d. uniform random phase, so
    per-target SNR stays interpretable.  ``gaussian``: circular complex
    Gaussian with unit variance.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence((scene.seed, SALT_CURRENTS)))
    shape = (scene.n_targets, scene.snapshots)
    if kind == "unit_phase":
        return np.exp(2j * np.pi * rng.random(shape))
    if kind == "gaussian":
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    raise ConfigurationError(f"unknown current kind {kind!r}")
