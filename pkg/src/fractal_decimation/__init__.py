"""Spectral decimation for self-similar Laplacians on the Interval and the Sierpinski gasket."""

from .exceptions import (ConsistencyError, DomainError, ExtensionError, FractalSpectraError,
                         NumericalError, ParameterError, PreconditionError, ResourceError,
                         SingularityError)
from .models import IntervalParams, SGParams, make_params
from .spectrum import EigenGenealogy, EigenPair, Spectrum

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError", "DomainError", "ExtensionError", "FractalSpectraError", "NumericalError",
    "ParameterError", "PreconditionError", "ResourceError", "SingularityError",
    "IntervalParams", "SGParams", "make_params", "EigenGenealogy", "EigenPair", "Spectrum",
]
