"""Exception types shared across the package."""


class VasculabError(Exception):
    """Base class for errors raised by this package."""


class StabilityError(VasculabError):
    """The background state violates the stability condition margin > 0."""


class DegenerateSpectrumError(VasculabError):
    """Eigenvalues too close for the projection formula to be trusted."""


class StepSizeError(VasculabError):
    """Requested time step exceeds the CFL / stiffness bound."""


class BlowUpError(VasculabError):
    """Solution left the admissible set (vacuum, NaN, or overflow)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class QuadratureError(VasculabError):
    """Adaptive quadrature failed to converge to the requested tolerance."""


class FitWindowError(VasculabError):
    """Decay-rate fit rejected: window too short or fit quality too poor."""


class ConfigError(VasculabError):
    """Malformed or inconsistent run configuration."""


class SnapshotFormatError(VasculabError):
    """Snapshot file is corrupt or truncated.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
