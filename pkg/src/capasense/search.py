"""Coarse-grid peak location and derivative-free refinement.

Shared by the tri-polarized estimator and the discrete-array benchmark: both
produce a log-spectrum callable; peaks are grid local maxima (8-neighbor,
azimuth-wrap aware), deduplicated by a minimum great-circle separation and
polished by Nelder-Mead ascent.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .geometry import angular_separation


@dataclass(frozen=True)
class GridSpec:
    """Rectangular scan region; azimuth interval is half-open [min, max)."""

    theta_min: float = -np.pi
    theta_max: float = np.pi
    phi_min: float = 0.0
    phi_max: float = np.pi / 2
    step: float = np.deg2rad(1.0)

    def thetas(self):
        return np.arange(self.theta_min, self.theta_max - 1e-12, self.step)

    def phis(self):
        return np.arange(self.phi_min, self.phi_max + 1e-12, self.step)


def default_grid(step):
    return GridSpec(step=step)


def window_grid(center, margin, step):
    """Scan window around a (theta, phi) center; elevation clipped to range."""
    t, p = center
    return GridSpec(
        theta_min=t - margin,
        theta_max=t + margin,
        phi_min=max(p - margin, -np.pi / 2),
        phi_max=min(p + margin, np.pi / 2),
        step=step,
    )


def _local_maxima(values, wrap_theta):
    """Boolean mask of 8-neighborhood local maxima of a (n_theta, n_phi) grid."""
    nt, npi = values.shape
    if wrap_theta and nt > 2:
        padded = np.vstack([values[-1:], values, values[:1]])
    else:
        padded = np.vstack([np.full((1, npi), -np.inf), values,
                            np.full((1, npi), -np.inf)])
    padded = np.hstack([np.full((padded.shape[0], 1), -np.inf), padded,
                        np.full((padded.shape[0], 1), -np.inf)])
    center = padded[1:-1, 1:-1]
    mask = np.ones_like(center, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= center >= padded[1 + di:1 + di + nt, 1 + dj:1 + dj + npi]
    return mask


def find_grid_maxima(scans, n_peaks, min_separation):
    """Top local maxima across scan regions, at least min_separation apart.

    Args:
        scans: list of (thetas, phis, log_values) triples.
        n_peaks: how many peaks to keep.
        min_separation: great-circle separation in radians.

    Returns:
        List of (log_value, theta, phi), descending, length <= n_peaks.
    """
    candidates = []
    for thetas, phis, logv in scans:
        wrap = thetas.size > 1 and (thetas[-1] - thetas[0]) >= 2 * np.pi - 2.5 * (
            thetas[1] - thetas[0]
        )
        mask = _local_maxima(logv, wrap_theta=wrap)
        for i, j in zip(*np.nonzero(mask)):
            candidates.append((float(logv[i, j]), float(thetas[i]), float(phis[j])))
    candidates.sort(reverse=True)
    picked = []
    for value, t, p in candidates:
        if all(
            angular_separation((t, p), (t2, p2)) >= min_separation
            for _, t2, p2 in picked
        ):
            picked.append((value, t, p))
        if len(picked) == n_peaks:
            break
    return picked


def search_peaks(scans, log_value, n_targets, min_separation, step,
                 xatol=1e-6, min_refined_log=None, candidate_budget=None):
    """Coarse candidates -> refinement -> optional quality gate -> top peaks.

    More coarse candidates than targets are refined because a narrow lobe is
    not distinctive at grid resolution; refined peaks that converge together
    are deduplicated by ``min_separation`` and, when ``min_refined_log`` is
    given (degenerate signal-complement mode), peaks below it are dropped as
    sidelobe artifacts.

    Returns list of (theta, phi, refined_log_value), descending, possibly
    shorter than ``n_targets``.
    """
    if candidate_budget is None:
        candidate_budget = max(2 * n_targets + 2, 6)
    coarse = find_grid_maxima(scans, candidate_budget, min_separation)
    refined = []
    for _, t0, p0 in coarse:
        t, p, lv = refine_peak(log_value, t0, p0, step=step, xatol=xatol)
        refined.append((lv, t, p))
    refined.sort(reverse=True)
    picked = []
    for lv, t, p in refined:
        if min_refined_log is not None and lv < min_refined_log:
            continue
        if all(
            angular_separation((t, p), (t2, p2)) >= min_separation
            for _, t2, p2 in picked
        ):
            picked.append((lv, t, p))
        if len(picked) == n_targets:
            break
    return [(t, p, lv) for lv, t, p in picked]


def refine_peak(log_value, theta0, phi0, step, xatol=1e-6, maxiter=400):
    """Nelder-Mead ascent of the log spectrum from a coarse grid peak."""
    res = minimize(
        lambda x: -log_value(x[0], x[1]),
        np.array([theta0, phi0]),
        method="Nelder-Mead",
        options=dict(
            initial_simplex=np.array(
                [
                    [theta0, phi0],
                    [theta0 + 0.5 * step, phi0],
                    [theta0, phi0 + 0.5 * step],
                ]
            ),
            xatol=xatol,
            fatol=1e-12,
            maxiter=maxiter,
        ),
    )
    theta, phi = res.x
    phi = float(np.clip(phi, -np.pi / 2, np.pi / 2))
    return float(theta), phi, float(-res.fun)
