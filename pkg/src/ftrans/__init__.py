"""Exact combinatorics of return-time sets for weighted backward shifts."""

from .errors import ConfigurationError, DomainError, InvariantViolation
from .intset import INFINITE, RunSet, counting, set_algebra

__all__ = [
    "INFINITE",
    "ConfigurationError",
    "DomainError",
    "InvariantViolation",
    "RunSet",
    "counting",
    "set_algebra",
]

__version__ = "0.1.0"
