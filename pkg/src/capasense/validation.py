"""Small input-validation helpers shared across the package."""

import numpy as np

from .exceptions import ConfigurationError


def as_vector3(value, name="vector"):
    """Coerce to a finite float array of shape (3,)."""
    v = np.asarray(value, dtype=float)
    if v.shape != (3,):
        raise ConfigurationError(f"{name} must have shape (3,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigurationError(f"{name} must be finite, got {v}")
    return v


def as_unit_vector3(value, name="unit vector"):
    """Coerce to shape (3,) and normalize; rejects near-zero input.

    Normalization is idempotent: vectors already unit to 1e-12 pass through
    unchanged so serialization round-trips exactly.
    """
    v = as_vector3(value, name)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ConfigurationError(f"{name} has near-zero norm {n:.3e}")
    if abs(n - 1.0) <= 1e-12:
        return v
    return v / n


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be positive, got {value}")
    return float(value)


def check_nonnegative(value, name):
    if not np.isfinite(value) or value < 0:
        raise ConfigurationError(f"{name} must be nonnegative, got {value}")
    return float(value)


def check_angle_ranges(theta, phi):
    if not (-np.pi < theta <= np.pi + 1e-12):
        raise ConfigurationError(f"azimuth {theta} outside (-pi, pi]")
    if not (-np.pi / 2 - 1e-12 <= phi <= np.pi / 2 + 1e-12):
        raise ConfigurationError(f"elevation {phi} outside [-pi/2, pi/2]")


def check_complex_matrix(a, shape, name):
    a = np.asarray(a)
    if a.shape != shape:
        raise ConfigurationError(f"{name} must have shape {shape}, got {a.shape}")
    return a.astype(complex, copy=False)
