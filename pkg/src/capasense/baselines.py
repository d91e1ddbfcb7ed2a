"""Benchmark systems: discrete planar array MUSIC, single-polarization MUSIC
and the Cramer-Rao lower bound of the discretized observation model.

The discrete planar array (SPDA) has half-wavelength element spacing over
the same footprint and an effective element aperture A_d = lambda^2 / (4 pi).
Each element reads the x-axis field scaled by A_d plus noise of variance
``noise_power * A_d`` (the white field noise collected over the element
aperture), so its per-sample SNR sits A_d below the continuous-aperture
nodes.  Sampling the field pointwise with unscaled noise would make the
1600-element array outperform the 256-node single-polarization pipeline and
invert the expected benchmark ordering.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import (ConfigurationError, EstimationError, SingularFimError,
                         UnderDetectionError)
from .field import noiseless_node_field
from .geometry import wave_vector, wrap_azimuth
from .music import DOAEstimate, TriPolarizedMusic
from .quadrature import build_node_grid, gauss_legendre_rule
from .search import GridSpec, default_grid, search_peaks
from .signals import SALT_SPDA, random_currents, snapshot_signals


def singlepol_music(field, n_targets, **params):
    """Equivalent-covariance MUSIC restricted to the (x, x) pair.

    A target whose transverse component has no x-axis projection is
    invisible to this estimator and is expected to be missed.
    """
    est = TriPolarizedMusic(n_targets=n_targets, pairs=(("x", "x"),), **params)
    return est.fit(field).doas_


@dataclass(frozen=True)
class SpdaConfig:
    """Half-wavelength discrete planar array over the aperture footprint."""

    spacing: float
    n_x: int
    n_y: int
    positions: np.ndarray  # (N_d, 3)
    effective_aperture: float

    @property
    def n_elements(self):
        return self.n_x * self.n_y


def spda_config(aperture):
    spacing = aperture.wavelength / 2.0
    n_x = int(np.ceil(aperture.length_x / spacing))
    n_y = int(np.ceil(aperture.length_y / spacing))
    xs = np.arange(n_x) * spacing - aperture.length_x / 2.0
    ys = np.arange(n_y) * spacing - aperture.length_y / 2.0
    positions = np.column_stack(
        [np.repeat(xs, n_y), np.tile(ys, n_x), np.zeros(n_x * n_y)]
    )
    return SpdaConfig(
        spacing=spacing,
        n_x=n_x,
        n_y=n_y,
        positions=positions,
        effective_aperture=aperture.wavelength ** 2 / (4.0 * np.pi),
    )


def sample_discrete_array(scene, config, snapshots, noise=None):
    """x-axis element voltages, shape (N_d, T)."""
    field = noiseless_node_field(scene, config.positions, signals=snapshots.signals)
    x = config.effective_aperture * field[0]
    if noise is not None:
        return x + noise
    if scene.noise_power > 0:
        nvar = scene.noise_power * config.effective_aperture
        rng = np.random.default_rng(np.random.SeedSequence((scene.seed, SALT_SPDA)))
        n = rng.standard_normal(x.shape + (2,))
        x = x + np.sqrt(nvar / 2.0) * (n[..., 0] + 1j * n[..., 1])
    return x


class DiscreteArrayMusic(BaseEstimator):
    """Classic sample-covariance MUSIC on the discrete benchmark array.

    ``fit(scene)`` draws the scene's snapshot currents (shared stream with
    the continuous-aperture synthesis, so the two receivers observe the
    same sources), samples the elements and runs the standard MUSIC search
    with the shared coarse-to-fine machinery.  The spectrum uses the
    signal-space complement ||a||^2 - ||U_s^H a||^2, identical to the
    noise-subspace projector for a Hermitian sample covariance.
    """

    def __init__(self, n_targets=1, grid=None, coarse_step_deg=1.0,
                 min_separation_deg=3.0, refine_xatol=1e-6):
        self.n_targets = n_targets
        self.grid = grid
        self.coarse_step_deg = coarse_step_deg
        self.min_separation_deg = min_separation_deg
        self.refine_xatol = refine_xatol

    def fit(self, X, y=None, snapshots=None, samples=None):
        scene = X
        config = spda_config(scene.aperture)
        if samples is None:
            if snapshots is None:
                snapshots = snapshot_signals(scene, random_currents(scene))
            samples = sample_discrete_array(scene, config, snapshots)
        T = samples.shape[1]
        if self.n_targets >= T:
            raise EstimationError("need n_targets < snapshots")
        # Gram route to the top-M signal eigenvectors (T may be < N_d)
        gram = samples.conj().T @ samples / T
        _, vec = np.linalg.eigh(gram)
        signal = samples @ vec[:, -self.n_targets:]
        signal, _ = np.linalg.qr(signal)
        k = scene.aperture.wavenumber
        positions = config.positions
        n_el = positions.shape[0]

        def log_values(thetas, phis):
            d = wave_vector(np.asarray(thetas), np.asarray(phis))
            A = np.exp(-1j * k * (positions @ d.T))
            denom = n_el - np.linalg.norm(signal.conj().T @ A, axis=0) ** 2
            return -np.log(np.maximum(denom, 1e-300))

        specs = self._grid_specs()
        scans = []
        for spec in specs:
            thetas, phis = spec.thetas(), spec.phis()
            TT, PP = np.meshgrid(thetas, phis, indexing="ij")
            vals = np.empty(TT.size)
            flat_t, flat_p = TT.ravel(), PP.ravel()
            chunk = 4096
            for start in range(0, flat_t.size, chunk):
                sl = slice(start, start + chunk)
                vals[sl] = log_values(flat_t[sl], flat_p[sl])
            scans.append((thetas, phis, vals.reshape(TT.shape)))
        min_sep = np.deg2rad(self.min_separation_deg)
        peaks = search_peaks(
            scans, lambda th, ph: float(log_values([th], [ph])[0]),
            self.n_targets, min_sep,
            step=np.deg2rad(self.coarse_step_deg), xatol=self.refine_xatol,
        )
        if len(peaks) < self.n_targets:
            raise UnderDetectionError(self.n_targets, [(t, p) for t, p, _ in peaks])
        angles = np.array([[float(wrap_azimuth(t)), float(p)] for t, p, _ in peaks])
        values = np.exp(np.clip([lv for _, _, lv in peaks], None, 700.0))
        self.config_ = config
        self.doas_ = DOAEstimate(angles=angles, values=values, mode="discrete")
        return self

    def _grid_specs(self):
        if self.grid is None:
            return [default_grid(np.deg2rad(self.coarse_step_deg))]
        if isinstance(self.grid, GridSpec):
            return [self.grid]
        return list(self.grid)


def spda_music(scene, n_targets, **params):
    """Functional wrapper around DiscreteArrayMusic."""
    return DiscreteArrayMusic(n_targets=n_targets, **params).fit(scene).doas_


# ---------------------------------------------------------------------------
# Cramer-Rao lower bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrlbReport:
    """Diagonal CRLB entries of the discretized observation model.

    Attitudes enter the parameter vector through a two-coordinate tangent
    chart at the true attitude, respecting the unit-norm constraint (the
    raw three-component parameterization makes the FIM structurally
    singular).
    """

    theta_bounds: np.ndarray      # (M,) rad^2
    phi_bounds: np.ndarray        # (M,) rad^2
    attitude_bounds: np.ndarray   # (M, 2) tangent-chart coordinates
    parameter_names: tuple
    fim: np.ndarray

    def to_dict(self):
        doc = {}
        m = self.theta_bounds.size
        for i in range(m):
            doc[f"theta_{i}"] = float(self.theta_bounds[i])
            doc[f"phi_{i}"] = float(self.phi_bounds[i])
            doc[f"attitude_{i}_c1"] = float(self.attitude_bounds[i, 0])
            doc[f"attitude_{i}_c2"] = float(self.attitude_bounds[i, 1])
        return doc


def _tangent_basis(q):
    probe = np.array([1.0, 0.0, 0.0])
    if abs(q @ probe) > 0.9:
        probe = np.array([0.0, 1.0, 0.0])
    b1 = np.cross(q, probe)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(q, b1)
    return b1, b2


def crlb(scene, snapshots, order=16, step=1e-6, cond_limit=1e14):
    """Fisher-information CRLB for DOA and attitude parameters.

    The noiseless quadrature-sampled field is the mean of the Gaussian
    observation; derivatives are central finite differences with the given
    step (radians for angles, tangent-chart units for attitude).

    Raises:
        ConfigurationError: for zero noise power (bound undefined).
        SingularFimError: when the FIM is numerically singular, naming the
            deficient parameter directions.
    """
    if scene.noise_power <= 0:
        raise ConfigurationError("CRLB requires positive noise power")
    grid = build_node_grid(scene.aperture, gauss_legendre_rule(order))
    m = scene.n_targets
    signals = np.asarray(snapshots.signals if hasattr(snapshots, "signals") else snapshots)
    doas0 = scene.doas
    att0 = np.array([t.attitude for t in scene.targets])
    bases = [_tangent_basis(q) for q in att0]
    names = tuple(
        [f"theta_{i}" for i in range(m)]
        + [f"phi_{i}" for i in range(m)]
        + [f"attitude_{i}_c{j}" for i in range(m) for j in (1, 2)]
    )

    def mean_field(beta):
        doas = np.column_stack([beta[:m], beta[m:2 * m]])
        atts = np.empty((m, 3))
        for i in range(m):
            c1, c2 = beta[2 * m + 2 * i], beta[2 * m + 2 * i + 1]
            q = att0[i] + c1 * bases[i][0] + c2 * bases[i][1]
            atts[i] = q / np.linalg.norm(q)
        return noiseless_node_field(
            scene, grid.positions, doas=doas, attitudes=atts, signals=signals
        ).ravel()

    beta0 = np.concatenate([doas0[:, 0], doas0[:, 1], np.zeros(2 * m)])
    n_par = beta0.size
    derivs = np.empty((mean_field(beta0).size, n_par), dtype=complex)
    for i in range(n_par):
        up, down = beta0.copy(), beta0.copy()
        up[i] += step
        down[i] -= step
        derivs[:, i] = (mean_field(up) - mean_field(down)) / (2 * step)
    fim = (2.0 / scene.noise_power) * np.real(derivs.conj().T @ derivs)
    eigvals, eigvecs = np.linalg.eigh(fim)
    if eigvals[0] <= 0 or eigvals[-1] / max(eigvals[0], 1e-300) > cond_limit:
        worst = eigvecs[:, 0]
        deficient = [names[i] for i in np.argsort(np.abs(worst))[::-1][:2]]
        raise SingularFimError(eigvals[-1] / max(eigvals[0], 1e-300), deficient)
    inv = np.linalg.inv(fim)
    diag = np.diag(inv)
    return CrlbReport(
        theta_bounds=diag[:m].copy(),
        phi_bounds=diag[m:2 * m].copy(),
        attitude_bounds=diag[2 * m:].reshape(m, 2).copy(),
        parameter_names=names,
        fim=fim,
    )
