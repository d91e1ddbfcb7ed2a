"""Equivalent covariance construction, subspace recovery and the
tri-polarized MUSIC spectrum.

The continuous sample covariance between polarization axes p and q has
infinite dimension; its eigenstructure is reached through the T x T
equivalent covariance

    [K_pq]_{i,j} = (Lx Ly / (4 T)) sum_n w_n e_q*(r_n, i) e_p(r_n, j)

whose eigenvectors are mapped back to aperture (node) space through the
pseudoinverse of the weighted, conjugated sample matrix
``A_q[t, n] = w_n e_q*(r_n, t)``.  The trailing T - M recovered vectors span
the noise subspace; DOAs are the directions whose steering samples are
orthogonal to it, aggregated over all nine (p, q) pairs by the product
spectrum ``prod (1 + 1 / ||alpha^H U2||)``.

Two practical points, both verified numerically:

* Orthogonality between a steering vector and a recovered noise eigenvector
  is a statement about aperture integrals, so the inner product must carry
  the quadrature weights.  The unweighted product is available behind
  ``weighted=False`` but has essentially no null at the true directions.
* With zero (or numerically zero) noise the trailing equivalent eigenvectors
  are annihilated by the recovery map, so the noise-subspace spectrum
  degenerates.  The estimator detects the rank collapse and switches to an
  exact signal-space-complement spectrum built from the recovered signal
  vectors.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import (ConfigurationError, EstimationError,
                         IllConditionedRecoveryError, UnderDetectionError)
from .field import POLAR_AXES, FieldSamples
from .geometry import wave_vector, wrap_azimuth
from .search import GridSpec, default_grid, search_peaks

FACTOR_CAP = 1e15  # spectrum factor sentinel for an exact null
RANK_COLLAPSE_TOL = 1e-10


def all_polar_pairs():
    """The nine ordered (p, q) polarization pairs."""
    return tuple(itertools.product(POLAR_AXES, POLAR_AXES))


def _check_pair(pair):
    p, q = pair
    if p not in POLAR_AXES or q not in POLAR_AXES:
        raise ConfigurationError(f"invalid polarization pair {pair!r}")
    return (p, q)


@dataclass(frozen=True)
class EquivCov:
    """T x T equivalent covariance for one polarization pair."""

    pair: tuple
    matrix: np.ndarray

    @property
    def is_self_pair(self):
        return self.pair[0] == self.pair[1]


def _recovery_matrix(field, q_axis):
    """A_q[t, n] = w_n e_q*(r_n, t), the weighted conjugated sample matrix."""
    w_full = field.grid.full_weights
    return field.axis(q_axis).conj().T * w_full[None, :]


def equivalent_covariance(field, pair):
    """Quadrature evaluation of the T x T equivalent covariance K_pq."""
    p, q = _check_pair(pair)
    A_q = _recovery_matrix(field, q)
    K = (A_q @ field.axis(p)) / field.n_snapshots
    return EquivCov(pair=(p, q), matrix=K)


@dataclass(frozen=True)
class NoiseSubspace:
    """Recovered noise-subspace basis for one pair, plus diagnostics.

    ``basis`` has shape (K^2, T - M).  When T exceeds the node count the
    equivalent covariance is rank deficient by discretization; the
    overflow modes have no continuum counterpart and are recovered as zero
    columns (self-pairs produce exact zeros there anyway).
    ``signal_basis`` holds the recovered top-M vectors, used by the
    degenerate-case spectrum and by diagnostics.
    """

    pair: tuple
    basis: np.ndarray
    eigenvalues: np.ndarray
    signal_basis: np.ndarray
    recovery_condition: float
    engine: str

    @property
    def rank_collapse_ratio(self):
        """|lambda_{M+1}| / |lambda_1|; ~0 when the field is noiseless."""
        m = self.signal_basis.shape[1]
        lead = abs(self.eigenvalues[0]) if self.eigenvalues.size else 0.0
        if lead == 0 or self.eigenvalues.size <= m:
            return 0.0
        return float(abs(self.eigenvalues[m]) / lead)


def _sorted_eig(matrix, hermitian):
    if hermitian:
        lam, U = np.linalg.eigh(matrix)
    else:
        lam, U = np.linalg.eig(matrix)
    order = np.argsort(np.abs(lam))[::-1]
    return lam[order], U[:, order]


def _split_dense(cov, field, n_targets):
    """Faithful route: eigendecompose the T x T matrix, recover via pinv."""
    lam, U = _sorted_eig(cov.matrix, cov.is_self_pair)
    A_q = _recovery_matrix(field, cov.pair[1])
    u, s, vh = np.linalg.svd(A_q, full_matrices=False)
    if s[0] == 0:
        raise IllConditionedRecoveryError(np.inf)
    rank = int(np.sum(s > s[0] * max(A_q.shape) * np.finfo(float).eps))
    inv_s = np.zeros_like(s)
    inv_s[:rank] = 1.0 / s[:rank]
    pinv = (vh.conj().T * inv_s[None, :]) @ u.conj().T
    condition = float(s[0] / s[rank - 1])
    return lam, pinv @ U[:, n_targets:], pinv @ U[:, :n_targets], condition


def _split_compact(cov, field, n_targets):
    """Equivalent route for T > K^2.

    Nonzero eigenpairs of K_pq are in bijection with those of the
    K^2 x K^2 matrix G = (1/T) E_p A_q via u' = A_q v, and the pinv
    recovery of u' is exactly v (A_q has full column rank).  Rank-overflow
    modes are emitted as zero columns.
    """
    T = field.n_snapshots
    A_q = _recovery_matrix(field, cov.pair[1])
    E_p = field.axis(cov.pair[0])
    n_nodes = E_p.shape[0]
    G = (E_p @ A_q) / T
    if cov.is_self_pair:
        # G = R W is similar to the Hermitian H = W^1/2 R W^1/2 through
        # H = W^1/2 G W^-1/2; eigenvectors map back as v = W^-1/2 u
        w = field.grid.full_weights
        sqrt_w = np.sqrt(w)
        H = G * (sqrt_w[:, None] / sqrt_w[None, :])
        lam, U = np.linalg.eigh(0.5 * (H + H.conj().T))
        order = np.argsort(np.abs(lam))[::-1]
        lam, V = lam[order].astype(complex), U[:, order] / sqrt_w[:, None]
    else:
        lam, V = _sorted_eig(G, hermitian=False)
    images = A_q @ V
    norms = np.linalg.norm(images, axis=0)
    tiny = norms <= norms.max() * 1e-14 if norms.max() > 0 else np.ones_like(norms, bool)
    scale = np.where(tiny, np.inf, norms)
    recovered = V / scale[None, :]
    sv = np.linalg.svd(A_q, compute_uv=False)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    noise = np.concatenate(
        [recovered[:, n_targets:], np.zeros((n_nodes, T - n_nodes), complex)], axis=1
    )
    eigenvalues = np.concatenate([lam, np.zeros(T - n_nodes, complex)])
    return eigenvalues, noise, recovered[:, :n_targets], condition


def subspace_split(cov, field, n_targets, engine="auto"):
    """Recover the node-level noise subspace from an equivalent covariance.

    Args:
        cov: EquivCov for one pair.
        field: the FieldSamples the covariance was built from.
        n_targets: known source count M (must be < T).
        engine: "dense" (T x T eigendecomposition), "compact"
            (equivalent K^2 x K^2 route, exact for T > K^2), or "auto".

    Raises:
        EstimationError: if ``n_targets >= T`` (no noise dimensions remain).
        IllConditionedRecoveryError: if the recovery matrix is identically
            zero (no field energy).
    """
    T = field.n_snapshots
    if n_targets >= T:
        raise EstimationError(
            f"need n_targets < snapshots for a noise subspace, got M={n_targets}, T={T}"
        )
    if cov.matrix.shape != (T, T):
        raise ConfigurationError("covariance/field snapshot count mismatch")
    if engine == "auto":
        engine = "compact" if T > field.grid.n_nodes else "dense"
    if engine == "dense":
        lam, noise, signal, condition = _split_dense(cov, field, n_targets)
    elif engine == "compact":
        if T <= field.grid.n_nodes:
            lam, noise, signal, condition = _split_dense(cov, field, n_targets)
            engine = "dense"
        else:
            lam, noise, signal, condition = _split_compact(cov, field, n_targets)
    else:
        raise ConfigurationError(f"unknown engine {engine!r}")
    if not np.all(np.isfinite(noise.view(float))):
        raise IllConditionedRecoveryError(condition)
    return NoiseSubspace(
        pair=cov.pair,
        basis=noise,
        eigenvalues=lam,
        signal_basis=signal,
        recovery_condition=condition,
        engine=engine,
    )


def decompose_pairs(field, n_targets, pairs=None, engine="auto"):
    """EquivCov + subspace recovery for every requested pair."""
    if pairs is None:
        pairs = all_polar_pairs()
    out = {}
    for pair in pairs:
        cov = equivalent_covariance(field, pair)
        out[_check_pair(pair)] = subspace_split(cov, field, n_targets, engine=engine)
    return out


def rank_collapsed(subspaces, tol=RANK_COLLAPSE_TOL):
    """True when every self-pair shows no noise floor (noiseless field)."""
    ratios = [
        sub.rank_collapse_ratio
        for pair, sub in subspaces.items()
        if pair[0] == pair[1]
    ]
    if not ratios:
        ratios = [sub.rank_collapse_ratio for sub in subspaces.values()]
    return max(ratios) < tol


def spectrum_value(alpha, subspaces, weights=None, cap=FACTOR_CAP, return_flag=False):
    """Tri-polarized spectrum value prod_{p,q} (1 + 1 / ||alpha^H U2||).

    ``weights`` (quadrature weights per node) are applied inside the inner
    product when given; ``None`` evaluates the unweighted literal form.
    An exactly zero projection norm contributes the capped factor
    ``1 + cap`` and sets the exact-null flag.
    """
    alpha = np.asarray(alpha)
    probe = alpha.conj() if weights is None else (alpha * weights).conj()
    value = 1.0
    exact_null = False
    for sub in subspaces.values():
        x = np.linalg.norm(probe @ sub.basis)
        if x == 0.0:
            exact_null = True
            value *= 1.0 + cap
        else:
            value *= 1.0 + min(1.0 / x, cap)
    if return_flag:
        return value, exact_null
    return value


@dataclass(frozen=True)
class SpectrumGrid:
    """Dense spectrum evaluation over an angle grid."""

    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray      # (n_theta, n_phi), linear scale, > 1
    log_values: np.ndarray  # same grid, natural log
    mode: str

    def normalized(self):
        """Copy of the values scaled so the peak equals 1."""
        return self.values / self.values.max()


@dataclass
class DOAEstimate:
    """Refined DOA estimates, sorted by descending spectrum value."""

    angles: np.ndarray  # (M, 2) columns (theta, phi), radians
    values: np.ndarray  # per-peak linear spectrum value
    mode: str = "noise"

    def __post_init__(self):
        self.angles = np.atleast_2d(np.asarray(self.angles, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        order = np.argsort(self.values)[::-1]
        self.angles = self.angles[order]
        self.values = self.values[order]

    @property
    def n_targets(self):
        return self.angles.shape[0]

    def to_dict(self):
        return {
            "mode": self.mode,
            "angles_rad": [[float(t), float(p)] for t, p in self.angles],
            "angles_deg": [
                [float(np.rad2deg(t)), float(np.rad2deg(p))] for t, p in self.angles
            ],
            "spectrum_values": [float(v) for v in self.values],
        }


class _SpectrumEngine:
    """Batched evaluator of the product spectrum (log domain).

    noise mode:  per-pair x = ||(w * alpha)^H U2||, factor 1 + 1/x.
    signal mode: per-pair x = distance of the weighted steering vector from
    the span of the recovered (unweighted) signal vectors, factor
    1 + ||alpha_w|| / x.  The signal mode is exact for noiseless data.
    """

    def __init__(self, grid, subspaces, weighted=True, mode="noise", cap=FACTOR_CAP):
        self.grid = grid
        self.mode = mode
        self.cap = cap
        self.weighted = weighted
        w = grid.full_weights
        self._w = w if weighted else np.ones_like(w)
        self._mats = []
        if mode == "noise":
            for sub in subspaces.values():
                basis = sub.basis
                keep = np.linalg.norm(basis, axis=0) > 0
                self._mats.append(np.ascontiguousarray(basis[:, keep]))
        elif mode == "signal":
            sqrt_w = np.sqrt(self._w)
            for sub in subspaces.values():
                Z = sub.signal_basis
                norms = np.linalg.norm(Z, axis=0)
                keep = norms > 1e-8 * norms.max() if norms.max() > 0 else []
                Z = Z[:, keep]
                if Z.shape[1] == 0:
                    continue
                # unweight the recovery, then orthonormalize in the
                # weighted inner product: span{W^-1 Z} probed by W^1/2 alpha
                Zw = (Z / self._w[:, None]) * sqrt_w[:, None]
                Q, _ = np.linalg.qr(Zw)
                self._mats.append(Q)
        else:
            raise ConfigurationError(f"unknown spectrum mode {mode!r}")

    def _steering_block(self, thetas, phis):
        d = wave_vector(thetas, phis)
        return np.exp(-1j * self.grid.wavenumber * (self.grid.positions @ d.T))

    def log_values(self, thetas, phis):
        """Log spectrum for flattened angle arrays (paired elementwise)."""
        A = self._steering_block(np.asarray(thetas), np.asarray(phis))
        out = np.zeros(A.shape[1])
        if self.mode == "noise":
            probe = (A.conj() * self._w[:, None])
            for basis in self._mats:
                x = np.linalg.norm(basis.T @ probe, axis=0)
                out += np.log1p(np.minimum(1.0 / np.maximum(x, 1e-300), self.cap))
        else:
            B = A * np.sqrt(self._w)[:, None]
            scale = np.linalg.norm(B, axis=0)
            for Q in self._mats:
                resid = B - Q @ (Q.conj().T @ B)
                x = np.linalg.norm(resid, axis=0)
                out += np.log1p(np.minimum(scale / np.maximum(x, 1e-300), self.cap))
        return out

    def log_value(self, theta, phi):
        return float(self.log_values([theta], [phi])[0])


def _scan(engine, grid_specs, chunk=4096):
    """Evaluate the log spectrum over one or more grid specs."""
    results = []
    for spec in grid_specs:
        thetas = spec.thetas()
        phis = spec.phis()
        TT, PP = np.meshgrid(thetas, phis, indexing="ij")
        flat_t, flat_p = TT.ravel(), PP.ravel()
        vals = np.empty(flat_t.size)
        for start in range(0, flat_t.size, chunk):
            sl = slice(start, start + chunk)
            vals[sl] = engine.log_values(flat_t[sl], flat_p[sl])
        results.append((thetas, phis, vals.reshape(TT.shape)))
    return results


class TriPolarizedMusic(BaseEstimator):
    """MUSIC estimator over the continuous aperture.

    Fitting computes the equivalent covariances for the configured
    polarization pairs, recovers the per-pair subspaces, scans the product
    spectrum on a coarse grid and refines the top peaks by Nelder-Mead
    ascent.  Results land in ``doas_`` (a DOAEstimate), ``subspaces_`` and
    ``spectrum_mode_``.

    Parameters
    ----------
    n_targets : known source count M.
    pairs : "all" for the nine tri-polarized pairs, or an explicit tuple of
        (p, q) axis pairs, e.g. (("x", "x"),) for single polarization.
    weighted : apply quadrature weights in the steering/subspace inner
        product.  The unweighted literal form is retained for comparison but
        produces no usable nulls.
    spectrum_mode : "auto" switches to the exact signal-complement spectrum
        when the covariances are numerically rank collapsed (noiseless
        data); "noise" / "signal" force a mode.
    grid : GridSpec, list of GridSpec (windowed search), or None for the
        default full-range 1-degree grid.
    """

    def __init__(self, n_targets=1, pairs="all", weighted=True,
                 spectrum_mode="auto", grid=None, coarse_step_deg=1.0,
                 min_separation_deg=3.0, refine_xatol=1e-6, engine="auto",
                 factor_cap=FACTOR_CAP, rank_tol=RANK_COLLAPSE_TOL):
        self.n_targets = n_targets
        self.pairs = pairs
        self.weighted = weighted
        self.spectrum_mode = spectrum_mode
        self.grid = grid
        self.coarse_step_deg = coarse_step_deg
        self.min_separation_deg = min_separation_deg
        self.refine_xatol = refine_xatol
        self.engine = engine
        self.factor_cap = factor_cap
        self.rank_tol = rank_tol

    # -- internals ---------------------------------------------------------
    def _pair_list(self):
        if self.pairs == "all":
            return all_polar_pairs()
        return tuple(_check_pair(p) for p in self.pairs)

    def _grid_specs(self):
        if self.grid is None:
            return [default_grid(np.deg2rad(self.coarse_step_deg))]
        if isinstance(self.grid, GridSpec):
            return [self.grid]
        return list(self.grid)

    def _resolve_mode(self, subspaces):
        if self.spectrum_mode in ("noise", "signal"):
            return self.spectrum_mode
        if self.spectrum_mode != "auto":
            raise ConfigurationError(f"unknown spectrum_mode {self.spectrum_mode!r}")
        return "signal" if rank_collapsed(subspaces, self.rank_tol) else "noise"

    # -- estimator API -----------------------------------------------------
    def prepare(self, X):
        """Covariances, subspace recovery and spectrum engine, no search."""
        if not isinstance(X, FieldSamples):
            raise ConfigurationError("TriPolarizedMusic expects FieldSamples")
        self.subspaces_ = decompose_pairs(X, self.n_targets, self._pair_list(),
                                          engine=self.engine)
        self.spectrum_mode_ = self._resolve_mode(self.subspaces_)
        self._engine_ = _SpectrumEngine(X.grid, self.subspaces_,
                                        weighted=self.weighted,
                                        mode=self.spectrum_mode_,
                                        cap=self.factor_cap)
        return self

    def fit(self, X, y=None):
        self.prepare(X)
        specs = self._grid_specs()
        scans = _scan(self._engine_, specs)
        min_sep = np.deg2rad(self.min_separation_deg)
        # A genuine peak in the exact signal-complement mode carries at least
        # one near-capped factor; sidelobe maxima top out far lower.
        gate = 20.0 if self.spectrum_mode_ == "signal" else None
        peaks = search_peaks(
            scans, self._engine_.log_value, self.n_targets, min_sep,
            step=np.deg2rad(self.coarse_step_deg), xatol=self.refine_xatol,
            min_refined_log=gate,
        )
        if len(peaks) < self.n_targets:
            raise UnderDetectionError(self.n_targets,
                                      [(t, p) for t, p, _ in peaks])
        angles = np.array([[float(wrap_azimuth(t)), float(p)] for t, p, _ in peaks])
        values = np.exp(np.clip([lv for _, _, lv in peaks], None, 700.0))
        self.doas_ = DOAEstimate(angles=angles, values=values,
                                 mode=self.spectrum_mode_)
        self._scans_ = scans
        return self

    def spectrum(self, grid=None):
        """Dense SpectrumGrid, for export and plotting (single region)."""
        if not hasattr(self, "_engine_"):
            raise EstimationError("call fit or prepare before spectrum")
        spec = grid or self._grid_specs()[0]
        (thetas, phis, logv), = _scan(self._engine_, [spec])
        values = np.exp(np.clip(logv, None, 700.0))
        return SpectrumGrid(theta=thetas, phi=phis, values=values,
                            log_values=logv, mode=self.spectrum_mode_)


def estimate_doa(field, n_targets, **params):
    """Functional wrapper around TriPolarizedMusic."""
    return TriPolarizedMusic(n_targets=n_targets, **params).fit(field).doas_


def scan_spectrum(field, n_targets, grid=None, **params):
    """Dense spectrum over ``grid`` (or the default), without peak search."""
    est = TriPolarizedMusic(n_targets=n_targets, grid=grid, **params)
    est.prepare(field)
    return est.spectrum(grid if isinstance(grid, GridSpec) else None)
