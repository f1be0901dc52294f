"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: missing files exit 2, ConfigError
exits 3, everything else raised mid-stage exits 4.
"""


class EpiriskError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EpiriskError):
    """A configuration value is out of bounds or inconsistent."""

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class DataError(EpiriskError):
    """Input data is malformed or inconsistent."""


class DegenerateSeriesError(DataError):
    """A case series carries no usable signal (e.g. all zeros)."""


class ShapeError(EpiriskError):
    """Tensor or array shapes do not conform."""


class GraphError(EpiriskError):
    """Edge indices or graph structure are inconsistent with the data."""


class InvalidStateError(EpiriskError):
    """An ODE state contains non-finite components."""


class TrainingError(EpiriskError):
    """Training-loop misuse: non-finite gradients, tape reuse, etc."""
