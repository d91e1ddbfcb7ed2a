"""Exception hierarchy.

``ConfigurationError`` maps to CLI exit code 2, ``EstimationError`` to 3 and
``ExportError`` to 4.
"""


class CapaError(Exception):
    """Base class for all library errors."""


class ConfigurationError(CapaError):
    """Invalid scene, experiment or operation configuration."""


class UnsupportedModeError(ConfigurationError):
    """Operation invoked on data it does not support (e.g. FFT path on
    non-uniform samples)."""


class EstimationError(CapaError):
    """An estimation step failed on valid inputs."""


class UnderDetectionError(EstimationError):
    """Fewer well-separated spectrum maxima than requested targets."""

    def __init__(self, requested, found):
        self.requested = requested
        self.found = list(found)
        super().__init__(
            f"found {len(self.found)} separated spectrum peaks, "
            f"requested {requested}: {self.found}"
        )


class IllConditionedRecoveryError(EstimationError):
    """Noise-subspace recovery matrix is numerically unusable."""

    def __init__(self, condition):
        self.condition = condition
        super().__init__(f"subspace recovery matrix condition number {condition:.3e}")


class SingularSystemError(EstimationError):
    """Normal-equations matrix too ill conditioned to invert (near-coincident
    directions)."""

    def __init__(self, condition, bound):
        self.condition = condition
        self.bound = bound
        super().__init__(
            f"normal matrix condition number {condition:.3e} exceeds bound {bound:.3e}"
        )


class UnidentifiableAttitudeError(EstimationError):
    """Projected snapshot matrix is zero: attitude parallel to the propagation
    direction is unobservable."""


class ZeroSnapshotError(EstimationError):
    """Known-snapshot attitude estimation received an all-zero snapshot vector."""


class AttitudeInconsistencyError(EstimationError):
    """Estimated transverse component exceeds unit norm beyond tolerance."""

    def __init__(self, norm):
        self.norm = norm
        super().__init__(f"transverse attitude norm {norm:.8f} exceeds 1 + 1e-6")


class SingularFimError(EstimationError):
    """Fisher information matrix is singular; lists the deficient directions."""

    def __init__(self, condition, deficient):
        self.condition = condition
        self.deficient = list(deficient)
        super().__init__(
            f"FIM condition number {condition:.3e}; "
            f"deficient parameter directions: {', '.join(self.deficient)}"
        )


class ExportError(CapaError):
    """I/O failure during result export, with path context."""

    def __init__(self, path, cause):
        self.path = str(path)
        self.cause = cause
        super().__init__(f"export to {path} failed: {cause}")
