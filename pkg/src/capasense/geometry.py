"""Direction geometry: wave vectors, DOA angles and polarization projection.

Conventions: azimuth ``theta`` in (-pi, pi], elevation ``phi`` in
[-pi/2, pi/2], all radians.  The propagation direction for angles
(theta, phi) is ``[cos(theta)cos(phi), sin(theta)cos(phi), sin(phi)]``.
At zenith (|phi| = pi/2) the azimuth is degenerate and reported as 0.
"""

import numpy as np

from .exceptions import ConfigurationError
from .validation import as_unit_vector3, as_vector3


def wave_vector(theta, phi):
    """Unit propagation direction for azimuth/elevation angles.

    Supports scalar or broadcast array input; the direction components are
    stacked on the last axis.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    d = np.stack(
        [
            np.cos(theta) * np.cos(phi),
            np.sin(theta) * np.cos(phi),
            np.sin(phi),
        ],
        axis=-1,
    )
    return d


def doa_from_position(position):
    """Ground-truth (theta, phi) such that wave_vector(theta, phi) = p / ||p||.

    Raises:
        ConfigurationError: for a zero position vector (undefined direction).
    """
    p = as_vector3(position, "position")
    r = np.linalg.norm(p)
    if r == 0:
        raise ConfigurationError("direction undefined for zero position vector")
    phi = np.arcsin(np.clip(p[2] / r, -1.0, 1.0))
    if abs(abs(phi) - np.pi / 2) < 1e-13:
        return 0.0, float(phi)  # azimuth degenerate at zenith
    return float(np.arctan2(p[1], p[0])), float(phi)


def polarization_vector(attitude, direction):
    """Transverse component of the attitude: (I - z z^T) q.

    Both inputs must be unit vectors.  The result is orthogonal to
    ``direction`` and has squared norm 1 - (z . q)^2.
    """
    q = as_unit_vector3(attitude, "attitude")
    z = as_unit_vector3(direction, "direction")
    return q - (z @ q) * z


def wrap_azimuth(theta):
    """Wrap azimuth difference or value into (-pi, pi]."""
    w = (np.asarray(theta) + np.pi) % (2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def angular_separation(angles_a, angles_b):
    """Great-circle angle between two (theta, phi) directions, in radians."""
    da = wave_vector(*angles_a)
    db = wave_vector(*angles_b)
    return float(np.arccos(np.clip(da @ db, -1.0, 1.0)))


def vector_angle(u, v, fold_sign=False):
    """Angle between two nonzero vectors; with ``fold_sign`` the sign
    ambiguity is removed (angle computed modulo a flip of either vector)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("angle undefined for zero vector")
    c = u @ v / (nu * nv)
    if fold_sign:
        c = abs(c)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
