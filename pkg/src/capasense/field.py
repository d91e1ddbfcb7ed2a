"""Synthesis of the tri-polarized field received over the aperture.

The noiseless field at aperture point r and time t is

    e(r, t) = sum_m s_m(t) * exp(-j k r . d_m) * v_m

with d_m the unit direction toward target m and v_m its transverse
(polarization) component.  Measurement noise is an independent circular
complex Gaussian of variance ``noise_power`` per axis, per sample point, per
snapshot; the continuous white process has no finite pointwise variance, so
this per-node convention is the documented discretization and is used by
every method under comparison.

Noise is drawn from per-snapshot substreams seeded as
``SeedSequence((seed, salt, t))`` so synthesis is reproducible regardless of
any internal parallelism.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, UnsupportedModeError
from .geometry import wave_vector
from .quadrature import NodeGrid, build_node_grid, gauss_legendre_rule
from .signals import SALT_NOISE, SALT_UNIFORM, random_currents, snapshot_signals

POLAR_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class FieldSamples:
    """Tri-axial complex field values at the quadrature nodes.

    ``values`` has shape (3, K^2, T): axis, node (kx-major), snapshot.
    """

    values: np.ndarray
    grid: NodeGrid
    scene: object

    def __post_init__(self):
        n = self.grid.n_nodes
        if self.values.shape[0] != 3 or self.values.shape[1] != n:
            raise ConfigurationError(
                f"field values must have shape (3, {n}, T), got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values.view(float))):
            raise ConfigurationError("field values must be finite")

    @property
    def n_snapshots(self):
        return self.values.shape[2]

    def axis(self, name):
        """Field samples (K^2, T) for polarization axis 'x', 'y' or 'z'."""
        return self.values[POLAR_AXES.index(name)]


def noiseless_node_field(scene, points, doas=None, attitudes=None, signals=None):
    """Deterministic field at arbitrary points, shape (3, N, T).

    DOAs, attitudes and snapshot signals default to the scene ground truth;
    they are overridable so likelihood derivatives can be formed.
    """
    k = scene.aperture.wavenumber
    if doas is None:
        doas = scene.doas
    if attitudes is None:
        attitudes = np.array([t.attitude for t in scene.targets]).reshape(-1, 3)
    directions = wave_vector(doas[:, 0], doas[:, 1])  # (M, 3)
    pol = attitudes - (np.sum(directions * attitudes, axis=1))[:, None] * directions
    steering = np.exp(-1j * k * (points @ directions.T))  # (N, M)
    s = signals  # (M, T)
    out = np.empty((3, points.shape[0], s.shape[1]), dtype=complex)
    for j in range(3):
        out[j] = steering @ (pol[:, j][:, None] * s)
    return out


def _noise_block(seed, salt, shape_per_snapshot, n_snapshots, noise_power):
    """Per-snapshot circular Gaussian noise, variance noise_power per sample."""
    out = np.empty(shape_per_snapshot + (n_snapshots,), dtype=complex)
    scale = np.sqrt(noise_power / 2.0)
    for t in range(n_snapshots):
        rng = np.random.default_rng(np.random.SeedSequence((seed, salt, t)))
        block = rng.standard_normal(shape_per_snapshot + (2,))
        out[..., t] = scale * (block[..., 0] + 1j * block[..., 1])
    return out


def synthesize_field(scene, grid, snapshots, noise=None):
    """Synthesize FieldSamples for a scene on the given node grid.

    With ``noise_power == 0`` the result is the exact deterministic sum.
    ``noise`` may inject a precomputed (3, K^2, T) complex noise block
    (already scaled); by default noise is drawn from the scene seed.
    """
    scene.warn_if_near_field()
    values = noiseless_node_field(scene, grid.positions, signals=snapshots.signals)
    if noise is not None:
        noise = np.asarray(noise, dtype=complex)
        if noise.shape != values.shape:
            raise ConfigurationError(
                f"injected noise must have shape {values.shape}, got {noise.shape}"
            )
        values = values + noise
    elif scene.noise_power > 0:
        values = values + _noise_block(
            scene.seed, SALT_NOISE, (3, grid.n_nodes), scene.snapshots, scene.noise_power
        )
    return FieldSamples(values=values, grid=grid, scene=scene)


def simulate(scene, order, currents=None, noise=None):
    """Convenience pipeline: rule -> grid -> snapshots -> field.

    Returns (grid, snapshots, field).
    """
    grid = build_node_grid(scene.aperture, gauss_legendre_rule(order))
    if currents is None:
        currents = random_currents(scene)
    snapshots = snapshot_signals(scene, currents)
    field = synthesize_field(scene, grid, snapshots, noise=noise)
    return grid, snapshots, field


def steering_sample(grid, theta, phi):
    """Aperture steering phases exp(-j k r . d) at the nodes, shape (K^2,)."""
    return np.exp(-1j * grid.wavenumber * (grid.positions @ wave_vector(theta, phi)))


def steering_matrix(grid, doas):
    """Steering samples for several (theta, phi) rows, shape (K^2, M)."""
    doas = np.atleast_2d(np.asarray(doas, dtype=float))
    d = wave_vector(doas[:, 0], doas[:, 1])  # (M, 3)
    return np.exp(-1j * grid.wavenumber * (grid.positions @ d.T))


# ---------------------------------------------------------------------------
# Uniform-grid sampling mode (input to the FFT attitude path)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformFieldSamples:
    """Field sampled on a uniform rectangular grid of cell centers.

    ``values`` has shape (3, nx, ny, T); sample (i, j) sits at
    ``origin + (i * dx, j * dy)``.
    """

    values: np.ndarray
    dx: float
    dy: float
    origin: tuple
    scene: object

    @property
    def n_snapshots(self):
        return self.values.shape[3]


def synthesize_field_uniform(scene, snapshots, nx, ny, noise=None):
    """Sample the field on an nx-by-ny uniform grid (same noise convention)."""
    scene.warn_if_near_field()
    ap = scene.aperture
    dx, dy = ap.length_x / nx, ap.length_y / ny
    xs = (np.arange(nx) + 0.5) * dx - ap.length_x / 2
    ys = (np.arange(ny) + 0.5) * dy - ap.length_y / 2
    points = np.column_stack(
        [np.repeat(xs, ny), np.tile(ys, nx), np.zeros(nx * ny)]
    )
    values = noiseless_node_field(scene, points, signals=snapshots.signals)
    values = values.reshape(3, nx, ny, -1)
    if noise is not None:
        values = values + np.asarray(noise, dtype=complex)
    elif scene.noise_power > 0:
        values = values + _noise_block(
            scene.seed, SALT_UNIFORM, (3, nx, ny), scene.snapshots, scene.noise_power
        )
    return UniformFieldSamples(
        values=values, dx=dx, dy=dy, origin=(float(xs[0]), float(ys[0])), scene=scene
    )


# ---------------------------------------------------------------------------
# Debug dumps (binary-free)
# ---------------------------------------------------------------------------

FIELD_DUMP_SCHEMA = 1


def dump_field_csv(field, path):
    """CSV dump: one row per (axis, node, snapshot) with re/im parts."""
    K = field.grid.order
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema_version", FIELD_DUMP_SCHEMA])
        writer.writerow(["axis", "kx", "ky", "snapshot", "re", "im"])
        for a, name in enumerate(POLAR_AXES):
            for n in range(field.grid.n_nodes):
                kx, ky = divmod(n, K)
                for t in range(field.n_snapshots):
                    v = field.values[a, n, t]
                    writer.writerow([name, kx, ky, t, repr(v.real), repr(v.imag)])


def dump_field_json(field, path):
    """JSON dump with scene echo, node positions and re/im arrays."""
    doc = {
        "schema_version": FIELD_DUMP_SCHEMA,
        "scene": field.scene.to_dict(),
        "quadrature_order": field.grid.order,
        "node_positions": field.grid.positions.tolist(),
        "node_weights": field.grid.weights.tolist(),
        "field_re": field.values.real.tolist(),
        "field_im": field.values.imag.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def require_uniform(samples):
    if not isinstance(samples, UniformFieldSamples):
        raise UnsupportedModeError(
            "this operation requires uniform-grid field samples "
            "(see synthesize_field_uniform)"
        )
    return samples
