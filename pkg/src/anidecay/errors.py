"""Exception types raised across the package."""


class AnidecayError(Exception):
    """Base class for all package errors."""


class GridMismatchError(AnidecayError, ValueError):
    """Array shapes or grids of two operands do not agree."""


class FilterBankError(AnidecayError, ValueError):
    """A dyadic filter bank cannot host the requested blocks."""

    def __init__(self, message, max_feasible=None):
        super().__init__(message)
        self.max_feasible = max_feasible


class ParameterGateError(AnidecayError, ValueError):
    """The exponents (s, s1) are outside the admissible range."""


class EnvelopeError(AnidecayError, ValueError):
    """A spectral envelope is incompatible with the claimed norm memberships."""


class BandError(AnidecayError, ValueError):
    """A field is not spectrally localised in the requested dyadic band."""


class BlowUpError(AnidecayError, RuntimeError):
    """The time integration produced non-finite or runaway values."""

    def __init__(self, message, time):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


class SnapshotDensityError(AnidecayError, ValueError):
    """Snapshots are too sparse for the Duhamel trapezoid quadrature."""

    def __init__(self, message, required_cadence):
        super().__init__(message)
        self.required_cadence = required_cadence


class IntegrabilityError(AnidecayError, ValueError):
    """An analytic profile violates an integrability condition."""


class FitError(AnidecayError, ValueError):
    """A power-law fit cannot be performed on the given samples."""


class ConfigError(AnidecayError, ValueError):
    """A configuration file or override is invalid."""
