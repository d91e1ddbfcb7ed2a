"""MSE / MAE metrics with optimal truth-to-estimate pairing.

Pairing minimizes the total great-circle distance over target permutations
(brute force; the scope caps M at 5).  MSE follows the benchmark definition:
squared errors summed over targets, averaged over trials, azimuth
differences wrapped into (-pi, pi].
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import angular_separation, wrap_azimuth


def assign_estimates(estimates, truths):
    """Permutation p minimizing sum_i dist(estimates[i], truths[p[i]])."""
    estimates = np.atleast_2d(estimates)
    truths = np.atleast_2d(truths)
    if estimates.shape != truths.shape:
        raise ValueError("estimate/truth target counts differ")
    m = truths.shape[0]
    dist = np.array(
        [[angular_separation(estimates[i], truths[j]) for j in range(m)] for i in range(m)]
    )
    best, best_perm = np.inf, None
    for perm in itertools.permutations(range(m)):
        total = sum(dist[i, perm[i]] for i in range(m))
        if total < best:
            best, best_perm = total, perm
    return best_perm


@dataclass(frozen=True)
class MseResult:
    mse_theta: float
    mse_phi: float
    per_target_theta: tuple
    per_target_phi: tuple
    n_used: int
    n_excluded: int


def mse_metric(truths, estimates_per_trial):
    """MSE of azimuth and elevation across trials.

    Args:
        truths: (M, 2) ground-truth angles.
        estimates_per_trial: iterable; each entry is an (M, 2) array of
            estimated angles, or None for a failed trial (excluded and
            counted).
    """
    truths = np.atleast_2d(np.asarray(truths, dtype=float))
    m = truths.shape[0]
    sq_t = np.zeros(m)
    sq_p = np.zeros(m)
    used = 0
    excluded = 0
    for est in estimates_per_trial:
        if est is None:
            excluded += 1
            continue
        est = np.atleast_2d(np.asarray(est, dtype=float))
        if est.shape[0] != m:
            excluded += 1
            continue
        perm = assign_estimates(est, truths)
        for i, j in enumerate(perm):
            dt = float(wrap_azimuth(est[i, 0] - truths[j, 0]))
            dp = est[i, 1] - truths[j, 1]
            sq_t[j] += dt ** 2
            sq_p[j] += dp ** 2
        used += 1
    if used == 0:
        nan = tuple([float("nan")] * m)
        return MseResult(float("nan"), float("nan"), nan, nan, 0, excluded)
    sq_t /= used
    sq_p /= used
    return MseResult(
        mse_theta=float(sq_t.sum()),
        mse_phi=float(sq_p.sum()),
        per_target_theta=tuple(map(float, sq_t)),
        per_target_phi=tuple(map(float, sq_p)),
        n_used=used,
        n_excluded=excluded,
    )


@dataclass(frozen=True)
class MaeResult:
    mae: float
    mae_worst: float
    ambiguity_rate: float
    n_used: int
    n_excluded: int


def _angle(u, v):
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    return float(np.arccos(np.clip(u @ v / (nu * nv), -1.0, 1.0)))


def mae_metric(truth_vectors, estimates_per_trial, mode):
    """Mean angular error of attitude estimates.

    blind mode: each per-trial entry is a list of perpendicular-direction
    vectors; truth is scored against the normalized transverse truth
    component, modulo sign.
    known mode: each entry is a list of 2-tuples of candidate vectors; the
    better candidate scores, the worse one feeds ``mae_worst`` and the
    ambiguity rate counts (trial, target) cells where the candidates differ
    against truth by more than 1e-6 rad.

    Zero-length estimates are excluded and counted.
    """
    truth_vectors = [np.asarray(t, dtype=float) for t in truth_vectors]
    angles_best = []
    angles_worst = []
    ambiguous = 0
    cells = 0
    excluded = 0
    for trial in estimates_per_trial:
        if trial is None:
            excluded += 1
            continue
        for m, est in enumerate(trial):
            truth = truth_vectors[m]
            if mode == "blind":
                vec = np.asarray(est, dtype=float)
                if np.linalg.norm(vec) == 0:
                    excluded += 1
                    continue
                ang = np.arccos(
                    np.clip(abs(vec @ truth) / (np.linalg.norm(vec) * np.linalg.norm(truth)), -1, 1)
                )
                angles_best.append(float(ang))
            elif mode == "known":
                cand = [np.asarray(c, dtype=float) for c in est]
                if any(np.linalg.norm(c) == 0 for c in cand):
                    excluded += 1
                    continue
                errs = sorted(_angle(c, truth) for c in cand)
                angles_best.append(errs[0])
                angles_worst.append(errs[-1])
                cells += 1
                if errs[-1] - errs[0] > 1e-6:
                    ambiguous += 1
            else:
                raise ValueError(f"unknown MAE mode {mode!r}")
    if not angles_best:
        return MaeResult(float("nan"), float("nan"), float("nan"), 0, excluded)
    return MaeResult(
        mae=float(np.mean(angles_best)),
        mae_worst=float(np.mean(angles_worst)) if angles_worst else float("nan"),
        ambiguity_rate=float(ambiguous / cells) if cells else float("nan"),
        n_used=len(angles_best),
        n_excluded=excluded,
    )


def half_power_width(log_value, center, axis="theta", span=0.5, tol=1e-5):
    """Half-power width of a normalized spectrum lobe along one angle axis.

    Finds where the linear spectrum normalized to the lobe peak crosses 0.5
    on each side of ``center`` by bisection; ``log_value(theta, phi)`` is
    the log spectrum.
    """
    theta0, phi0 = center
    peak = log_value(theta0, phi0)
    target = peak + np.log(0.5)

    def offset_value(delta):
        if axis == "theta":
            return log_value(theta0 + delta, phi0)
        return log_value(theta0, phi0 + delta)

    width = 0.0
    for sign in (-1.0, 1.0):
        lo, hi = 0.0, None
        probe = span / 64.0
        while probe <= span:
            if offset_value(sign * probe) < target:
                hi = probe
                break
            lo = probe
            probe *= 2.0
        if hi is None:
            raise ValueError("half-power crossing not found within span")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if offset_value(sign * mid) < target:
                hi = mid
            else:
                lo = mid
        width += 0.5 * (lo + hi)
    return width
