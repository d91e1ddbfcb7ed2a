"""Attitude recovery from the received field and DOA estimates.

The composite S(t) V is recovered by least squares over the aperture: the
normal equations pair the windowed steering integrals Q(t) with the
steering Gram matrix.  Each recovered row gamma_m(t) = s_m(t) v_m then
yields attitude information:

* unknown snapshots: only the direction of the transverse component is
  identifiable; it is the dominant left singular direction of the projected
  real/imaginary stack G_m (sign ambiguous, full attitude a one-parameter
  family kappa1 * u_perp + kappa2 * z).
* known snapshots: the transverse component has the closed form
  (I - z z^T) G_m xi / ||xi||^2 and the parallel magnitude follows from the
  unit-norm constraint, leaving exactly two mirror candidates.

The Gram matrix can be formed two ways.  ``matched`` evaluates it with the
same quadrature rule as Q, which makes the least squares exact for
noiseless data on the node grid; ``sinc`` uses the closed-form
Lx Ly sinc(k dx Lx / 2) sinc(k dy Ly / 2) continuum expression, which
deviates at coarse quadrature orders.  ``matched`` is the default.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import (AttitudeInconsistencyError, ConfigurationError,
                         SingularSystemError, UnidentifiableAttitudeError,
                         ZeroSnapshotError)
from .field import FieldSamples, require_uniform, steering_matrix
from .geometry import wave_vector
from .music import DOAEstimate

# Overshoot of ||q_perp|| above 1 absorbed as noise (parallel component
# clamped to zero, candidates renormalized).  A near-transverse attitude is
# routinely pushed past 1 by ordinary measurement noise, so the window must
# sit well above the noise scale; gross violations still raise.
NORM_CLAMP = 1e-2


def _doa_array(doas):
    if isinstance(doas, DOAEstimate):
        return doas.angles
    return np.atleast_2d(np.asarray(doas, dtype=float))


def q_matrix(field, doas, t):
    """Windowed steering integrals [Q]_{i,j} = int a_i*(r) e_j(r, t) dr.

    Evaluated with the field's quadrature rule; exact for noiseless data up
    to quadrature error.
    """
    return q_matrix_series(field, doas)[:, :, t]


def q_matrix_series(field, doas):
    """Q for every snapshot, shape (M, 3, T)."""
    doas = _doa_array(doas)
    A = steering_matrix(field.grid, doas)           # (K^2, M)
    w = field.grid.full_weights
    return np.einsum("nm,n,jnt->mjt", A.conj(), w, field.values)


def q_matrix_fft(samples, doas, t, n_fft=2048):
    """FFT path for Q on uniform-grid samples.

    Zero-padded 2-D FFT of the windowed field, evaluated at the spatial
    frequency (-k dx / 2pi, -k dy / 2pi) of each target by bilinear
    interpolation between phase-referenced bins.

    Raises:
        UnsupportedModeError: if ``samples`` are not uniform-grid samples.
        ConfigurationError: if n_fft is not a power of two >= the grid, or a
            queried frequency exceeds the grid Nyquist limit.
    """
    samples = require_uniform(samples)
    doas = _doa_array(doas)
    vals = samples.values[:, :, :, t]
    nx, ny = vals.shape[1], vals.shape[2]
    if n_fft < max(nx, ny) or (n_fft & (n_fft - 1)) != 0:
        raise ConfigurationError(
            f"n_fft must be a power of two >= grid size {max(nx, ny)}, got {n_fft}"
        )
    k = samples.scene.aperture.wavenumber
    dx, dy = samples.dx, samples.dy
    x0, y0 = samples.origin
    d = wave_vector(doas[:, 0], doas[:, 1])
    fx = -k * d[:, 0] / (2 * np.pi)
    fy = -k * d[:, 1] / (2 * np.pi)
    if np.any(np.abs(fx) > 0.5 / dx) or np.any(np.abs(fy) > 0.5 / dy):
        raise ConfigurationError("queried spatial frequency beyond grid Nyquist limit")
    M = doas.shape[0]
    out = np.empty((M, 3), dtype=complex)
    for j in range(3):
        F = np.fft.fft2(vals[j], s=(n_fft, n_fft)) * (dx * dy)
        for i in range(M):
            out[i, j] = _bilinear_bin(F, fx[i], fy[i], n_fft, dx, dy, x0, y0)
    return out


def _bilinear_bin(F, fx, fy, n_fft, dx, dy, x0, y0):
    """Interpolate the continuous transform at (fx, fy).

    Each corner bin is phase-referenced to aperture coordinates
    (factor exp(-2 pi j f . r0)) before interpolation so the interpolated
    surface is the smooth centered-window transform.
    """
    bx = fx * n_fft * dx
    by = fy * n_fft * dy
    ix, iy = int(np.floor(bx)), int(np.floor(by))
    tx, ty = bx - ix, by - iy
    val = 0.0 + 0.0j
    for ib, wx in ((ix, 1 - tx), (ix + 1, tx)):
        for jb, wy in ((iy, 1 - ty), (iy + 1, ty)):
            f_bin_x = ib / (n_fft * dx)
            f_bin_y = jb / (n_fft * dy)
            phase = np.exp(-2j * np.pi * (f_bin_x * x0 + f_bin_y * y0))
            val += wx * wy * F[ib % n_fft, jb % n_fft] * phase
    return val


def xi_matrix(doas, aperture):
    """Closed-form steering Gram matrix.

    [Xi]_{ij} = Lx Ly sinc(k dd_x Lx / 2) sinc(k dd_y Ly / 2) with
    sinc(x) = sin(x) / x; symmetric with diagonal exactly Lx Ly.
    """
    doas = _doa_array(doas)
    d = wave_vector(doas[:, 0], doas[:, 1])
    k = aperture.wavenumber
    ddx = d[:, 0][:, None] - d[:, 0][None, :]
    ddy = d[:, 1][:, None] - d[:, 1][None, :]
    sx = np.sinc(k * ddx * aperture.length_x / 2 / np.pi)
    sy = np.sinc(k * ddy * aperture.length_y / 2 / np.pi)
    return aperture.area * sx * sy


def xi_matrix_matched(doas, grid):
    """Steering Gram evaluated with the node quadrature rule.

    This is the exact normal-equations matrix of the discretized least
    squares, so gamma recovery is exact for noiseless node data.
    """
    doas = _doa_array(doas)
    A = steering_matrix(grid, doas)
    return (A.conj().T * grid.full_weights[None, :]) @ A


def estimate_gamma(q, xi, cond_bound=1e10):
    """Solve Xi gamma = Q.

    ``q`` may be a single (M, 3) snapshot or the (M, 3, T) series.

    Raises:
        SingularSystemError: when cond(Xi) exceeds ``cond_bound``
            (near-coincident DOAs).
    """
    q = np.asarray(q, dtype=complex)
    xi = np.asarray(xi)
    condition = float(np.linalg.cond(xi))
    if not np.isfinite(condition) or condition > cond_bound:
        raise SingularSystemError(condition, cond_bound)
    return np.linalg.solve(xi, q.reshape(xi.shape[0], -1)).reshape(q.shape)


def assemble_gm(gammas, m):
    """Re/Im interleaved stack of gamma_m(t), shape (3, 2T).

    Column order is Re(1), Im(1), Re(2), Im(2), ...
    """
    gammas = np.asarray(gammas)
    if not 0 <= m < gammas.shape[0]:
        raise IndexError(f"target index {m} out of range for M={gammas.shape[0]}")
    row = gammas[m]  # (3, T)
    out = np.empty((3, 2 * row.shape[1]))
    out[:, 0::2] = row.real
    out[:, 1::2] = row.imag
    return out


def interleave_snapshots(signals_m):
    """Re/Im interleaved snapshot vector xi_m, shape (2T,)."""
    s = np.asarray(signals_m)
    out = np.empty(2 * s.shape[0])
    out[0::2] = s.real
    out[1::2] = s.imag
    return out


@dataclass
class AttitudeEstimate:
    """Result of attitude estimation for one target.

    blind mode: ``perpendicular`` is the unit transverse direction (sign
    ambiguous, flag always set); the full attitude is the one-parameter
    family kappa1 * perpendicular + kappa2 * direction with
    kappa1^2 + kappa2^2 = 1.
    known mode: ``candidates`` holds the two unit attitude vectors whose
    difference is collinear with the propagation direction.
    """

    mode: str
    direction: np.ndarray
    perpendicular: np.ndarray = None
    sign_ambiguous: bool = True
    candidates: tuple = None
    parallel_magnitude: float = None
    clamped: bool = False

    def to_dict(self, truth=None):
        doc = {"mode": self.mode, "direction": list(map(float, self.direction))}
        if self.perpendicular is not None:
            doc["perpendicular"] = list(map(float, self.perpendicular))
            doc["sign_ambiguous"] = self.sign_ambiguous
        if self.mode == "blind":
            doc["family"] = "kappa1 * perpendicular + kappa2 * direction, kappa1^2 + kappa2^2 = 1"
        if self.candidates is not None:
            doc["candidates"] = [list(map(float, c)) for c in self.candidates]
            doc["parallel_magnitude"] = float(self.parallel_magnitude)
            doc["clamped"] = self.clamped
        if truth is not None:
            truth = np.asarray(truth, dtype=float)
            if self.candidates is not None:
                doc["angular_residuals"] = [
                    float(np.arccos(np.clip(c @ truth, -1, 1))) for c in self.candidates
                ]
            else:
                z = self.direction
                tperp = truth - (z @ truth) * z
                n = np.linalg.norm(tperp)
                if n > 0:
                    c = abs(self.perpendicular @ (tperp / n))
                    doc["angular_residuals"] = [float(np.arccos(np.clip(c, -1, 1)))]
        return doc


def _first_nonzero_positive(u, tol=1e-9):
    for comp in u:
        if abs(comp) > tol:
            return u if comp > 0 else -u
    return u


def estimate_attitude_blind(gm, direction):
    """Transverse attitude direction from the projected Re/Im stack.

    Returns the dominant left singular direction of (I - z z^T) G_m,
    re-projected and normalized, sign fixed so the first nonzero component
    is positive.

    Raises:
        UnidentifiableAttitudeError: if the projected stack is numerically
            zero (attitude parallel to the propagation direction, or no
            snapshot energy).
    """
    z = np.asarray(direction, dtype=float)
    gm = np.asarray(gm, dtype=float)
    projected = gm - np.outer(z, z @ gm)
    scale = max(np.linalg.norm(gm), 1.0)
    if np.linalg.norm(projected) <= 1e-12 * scale:
        raise UnidentifiableAttitudeError(
            "projected snapshot stack is zero; only attitudes transverse to "
            "the propagation direction are identifiable"
        )
    u = np.linalg.svd(projected, full_matrices=False)[0][:, 0]
    u = u - (z @ u) * z
    u = u / np.linalg.norm(u)
    u = _first_nonzero_positive(u)
    return AttitudeEstimate(mode="blind", direction=z, perpendicular=u,
                            sign_ambiguous=True)


def estimate_attitude_known(gm, xi, direction, norm_tolerance=NORM_CLAMP):
    """Two-candidate attitude from known snapshots.

    q_perp = (I - z z^T) G_m xi / ||xi||^2; the parallel magnitude is
    sqrt(1 - ||q_perp||^2) with the radicand clamped at zero for
    ||q_perp|| in (1, 1 + norm_tolerance] (q_perp is then renormalized so
    both coincident candidates stay exactly unit length).

    Raises:
        ZeroSnapshotError: for an all-zero snapshot vector.
        AttitudeInconsistencyError: if ||q_perp|| > 1 + norm_tolerance
            (noise exceeded geometry).
    """
    z = np.asarray(direction, dtype=float)
    xi = np.asarray(xi, dtype=float)
    gm = np.asarray(gm, dtype=float)
    energy = float(xi @ xi)
    if energy == 0.0:
        raise ZeroSnapshotError("snapshot vector is identically zero")
    qperp = gm @ xi / energy
    qperp = qperp - (z @ qperp) * z
    norm = float(np.linalg.norm(qperp))
    clamped = False
    if norm > 1.0 + norm_tolerance:
        raise AttitudeInconsistencyError(norm)
    if norm > 1.0:
        qperp = qperp / norm
        parallel = 0.0
        clamped = True
    else:
        parallel = float(np.sqrt(1.0 - norm ** 2))
    plus = qperp + parallel * z
    minus = qperp - parallel * z
    return AttitudeEstimate(
        mode="known",
        direction=z,
        perpendicular=qperp,
        sign_ambiguous=False,
        candidates=(plus, minus),
        parallel_magnitude=parallel,
        clamped=clamped,
    )


class AttitudeEstimator(BaseEstimator):
    """Attitude estimation pipeline (Algorithm-2 shape).

    ``fit(field, doas=..., snapshots=...)`` computes the steering integrals,
    solves for the gamma series and estimates each target's attitude.
    DOAs are normally the output of the DOA estimator; ground truth can be
    injected for isolation testing.  ``snapshots`` (the complex s_m(t)
    matrix) switches to known-snapshot mode unless ``mode`` pins it.

    Attributes after fit: ``gammas_`` (M, 3, T), ``attitudes_`` (list of
    AttitudeEstimate), ``mode_``.
    """

    def __init__(self, mode="auto", xi_mode="matched", q_path="quadrature",
                 n_fft=2048, cond_bound=1e10, norm_tolerance=NORM_CLAMP):
        self.mode = mode
        self.xi_mode = xi_mode
        self.q_path = q_path
        self.n_fft = n_fft
        self.cond_bound = cond_bound
        self.norm_tolerance = norm_tolerance

    def _xi(self, doas, field):
        if self.xi_mode == "matched" and isinstance(field, FieldSamples):
            return xi_matrix_matched(doas, field.grid)
        if self.xi_mode not in ("matched", "sinc"):
            raise ConfigurationError(f"unknown xi_mode {self.xi_mode!r}")
        return xi_matrix(doas, field.scene.aperture)

    def _q_series(self, field, doas):
        if self.q_path == "quadrature":
            if not isinstance(field, FieldSamples):
                raise ConfigurationError("quadrature path requires node-grid FieldSamples")
            return q_matrix_series(field, doas)
        if self.q_path == "fft":
            samples = require_uniform(field)
            T = samples.n_snapshots
            series = [q_matrix_fft(samples, doas, t, self.n_fft) for t in range(T)]
            return np.stack(series, axis=2)
        raise ConfigurationError(f"unknown q_path {self.q_path!r}")

    def fit(self, X, y=None, doas=None, snapshots=None):
        if doas is None:
            raise ConfigurationError("attitude estimation requires DOA estimates")
        doas = _doa_array(doas)
        mode = self.mode
        if mode == "auto":
            mode = "known" if snapshots is not None else "blind"
        if mode == "known" and snapshots is None:
            raise ConfigurationError("known-snapshot mode requires snapshots")
        if mode not in ("blind", "known"):
            raise ConfigurationError(f"unknown attitude mode {mode!r}")
        q = self._q_series(X, doas)
        xi = self._xi(doas, X)
        self.gammas_ = estimate_gamma(q, xi, cond_bound=self.cond_bound)
        directions = wave_vector(doas[:, 0], doas[:, 1])
        out = []
        for m in range(doas.shape[0]):
            gm = assemble_gm(self.gammas_, m)
            if mode == "blind":
                out.append(estimate_attitude_blind(gm, directions[m]))
            else:
                xi_m = interleave_snapshots(np.asarray(snapshots)[m])
                out.append(estimate_attitude_known(
                    gm, xi_m, directions[m], norm_tolerance=self.norm_tolerance))
        self.attitudes_ = out
        self.mode_ = mode
        return self


def estimate_attitudes(field, doas, snapshots=None, **params):
    """Functional wrapper around AttitudeEstimator."""
    est = AttitudeEstimator(**params)
    est.fit(field, doas=doas, snapshots=snapshots)
    return est.attitudes_
