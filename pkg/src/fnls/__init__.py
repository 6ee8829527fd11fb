"""Picard-iterate laboratory for ``u_t + i D^alpha u = u D^beta u``."""
from .errors import DomainError, RegimeError, ResourceError, TruncationError
from .params import ExperimentParams

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "ExperimentParams",
    "RegimeError",
    "ResourceError",
    "TruncationError",
]
