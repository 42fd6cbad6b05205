"""Exception types shared across the package."""


class MGTError(Exception):
    """Base class for all package errors."""


class GeometryError(MGTError):
    """Malformed domain description or failed geometric hypothesis."""


class CertificationError(GeometryError):
    """Multiplier vector field failed its certification checks.

    Carries the measured report so callers can inspect how far off the
    field was.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MeshError(MGTError):
    """Invalid mesh input (resolution too coarse, degenerate elements)."""


class IllPosedMapError(MGTError):
    """Harmonic-extension solve attempted with a singular operator."""


class UndefinedWeightError(MGTError):
    """A sign-definite weight (alpha or gamma) is negative somewhere."""


class ConfigError(MGTError):
    """Scenario configuration violates the schema or its invariants."""


class NumericalError(MGTError):
    """Linear-solve breakdown, NaN/overflow during time stepping."""
