"""Pseudo-spectral experiments on decay rates for the anisotropic Navier-Stokes system."""

__version__ = "1.0.0"

from .errors import (  # noqa: E402
    AnidecayError,
    BandError,
    BlowUpError,
    ConfigError,
    EnvelopeError,
    FilterBankError,
    FitError,
    GridMismatchError,
    IntegrabilityError,
    ParameterGateError,
    SnapshotDensityError,
)
from .spectral import Grid3, SpectralScalarField, SpectralVectorField  # noqa: E402

__all__ = [
    "AnidecayError",
    "BandError",
    "BlowUpError",
    "ConfigError",
    "EnvelopeError",
    "FilterBankError",
    "FitError",
    "Grid3",
    "GridMismatchError",
    "IntegrabilityError",
    "ParameterGateError",
    "SnapshotDensityError",
    "SpectralScalarField",
    "SpectralVectorField",
    "__version__",
]
