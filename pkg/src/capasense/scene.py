"""Scene description: aperture, dipole targets, noise and snapshot count.

A scene is the full ground-truth generator input.  It can be serialized to
and from a JSON document with keys ``aperture {Lx, Ly, lambda, eta}``,
``targets [{position, attitude, length}]``, ``noise_power``, ``snapshots``
and ``seed``.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .geometry import doa_from_position, polarization_vector, wave_vector
from .validation import (as_unit_vector3, as_vector3, check_nonnegative,
                         check_positive)

FREE_SPACE_IMPEDANCE = 120.0 * np.pi  # ohms

DEFAULT_DIPOLE_LENGTH = 0.01  # meters, << lambda for the short-dipole model


@dataclass(frozen=True)
class ApertureConfig:
    """Rectangular aperture on the XOY plane, centered at the origin."""

    length_x: float
    length_y: float
    wavelength: float
    impedance: float = FREE_SPACE_IMPEDANCE

    def __post_init__(self):
        check_positive(self.length_x, "length_x")
        check_positive(self.length_y, "length_y")
        check_positive(self.wavelength, "wavelength")
        check_positive(self.impedance, "impedance")

    @property
    def wavenumber(self):
        return 2.0 * np.pi / self.wavelength

    @property
    def area(self):
        return self.length_x * self.length_y

    @property
    def far_field_distance(self):
        """Rayleigh distance 2 D^2 / lambda with D the aperture diagonal."""
        diag_sq = self.length_x ** 2 + self.length_y ** 2
        return 2.0 * diag_sq / self.wavelength


@dataclass(frozen=True)
class Target:
    """Hertzian dipole target.

    The attitude is normalized at construction; tabulated orientations are
    often only approximately unit length.
    """

    position: np.ndarray
    attitude: np.ndarray
    length: float = DEFAULT_DIPOLE_LENGTH

    def __post_init__(self):
        object.__setattr__(self, "position", as_vector3(self.position, "position"))
        object.__setattr__(self, "attitude", as_unit_vector3(self.attitude, "attitude"))
        check_positive(self.length, "dipole length")
        if self.position[2] <= 0:
            raise ConfigurationError(
                f"target must be in front of the aperture (z > 0), got z = {self.position[2]}"
            )

    @property
    def range(self):
        return float(np.linalg.norm(self.position))

    @property
    def doa(self):
        """Ground-truth (theta, phi) of the target."""
        return doa_from_position(self.position)

    @property
    def direction(self):
        """Unit propagation direction (aperture center toward the target)."""
        return wave_vector(*self.doa)

    @property
    def polarization(self):
        """Transverse attitude component carried by the field."""
        return polarization_vector(self.attitude, self.direction)

    def is_far_field(self, aperture):
        return self.range > aperture.far_field_distance


@dataclass(frozen=True)
class Scene:
    aperture: ApertureConfig
    targets: tuple
    noise_power: float = 0.0
    snapshots: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        check_nonnegative(self.noise_power, "noise_power")
        if self.snapshots < max(len(self.targets), 1):
            raise ConfigurationError(
                f"snapshot count {self.snapshots} below target count {len(self.targets)}"
            )

    @property
    def n_targets(self):
        return len(self.targets)

    @property
    def doas(self):
        """Ground-truth angles, shape (M, 2) columns (theta, phi)."""
        return np.array([t.doa for t in self.targets]).reshape(-1, 2)

    @property
    def polarizations(self):
        """Stacked transverse attitude rows, shape (M, 3)."""
        return np.array([t.polarization for t in self.targets]).reshape(-1, 3)

    def warn_if_near_field(self):
        for i, t in enumerate(self.targets):
            if not t.is_far_field(self.aperture):
                warnings.warn(
                    f"target {i} at range {t.range:.1f} m is inside the "
                    f"far-field distance {self.aperture.far_field_distance:.1f} m; "
                    "the planar-wave model is approximate",
                    stacklevel=3,
                )

    def replace(self, **kwargs):
        """Return a copy with the given fields replaced."""
        data = dict(
            aperture=self.aperture,
            targets=self.targets,
            noise_power=self.noise_power,
            snapshots=self.snapshots,
            seed=self.seed,
        )
        data.update(kwargs)
        return Scene(**data)

    def to_dict(self):
        return {
            "aperture": {
                "Lx": self.aperture.length_x,
                "Ly": self.aperture.length_y,
                "lambda": self.aperture.wavelength,
                "eta": self.aperture.impedance,
            },
            "targets": [
                {
                    "position": list(t.position),
                    "attitude": list(t.attitude),
                    "length": t.length,
                }
                for t in self.targets
            ],
            "noise_power": self.noise_power,
            "snapshots": self.snapshots,
            "seed": self.seed,
        }


def scene_from_dict(data):
    try:
        ap = data["aperture"]
        aperture = ApertureConfig(
            length_x=ap["Lx"],
            length_y=ap["Ly"],
            wavelength=ap["lambda"],
            impedance=ap.get("eta", FREE_SPACE_IMPEDANCE),
        )
        targets = [
            Target(
                position=t["position"],
                attitude=t["attitude"],
                length=t.get("length", DEFAULT_DIPOLE_LENGTH),
            )
            for t in data["targets"]
        ]
        return Scene(
            aperture=aperture,
            targets=targets,
            noise_power=data.get("noise_power", 0.0),
            snapshots=data.get("snapshots", len(targets)),
            seed=data.get("seed", 0),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"invalid scene document: {exc}") from exc


def load_scene(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"scene file {path} is not valid JSON: {exc}") from exc
    return scene_from_dict(data)


def save_scene(scene, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
