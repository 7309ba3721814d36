"""Continuous dual Hahn polynomials, their orthogonality measures and the
Markov process whose transition probabilities they define."""
from .errors import (ArgumentError, CdhError, ConvergenceError, DomainError,
                     NotNormalized, PoleError)
from .params import CdhParams, ProcessParams

__all__ = ["ArgumentError", "CdhError", "ConvergenceError", "DomainError",
           "NotNormalized", "PoleError", "CdhParams", "ProcessParams"]
__version__ = "0.1.0"
