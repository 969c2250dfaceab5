"""
core/exceptions.py - Error types
All errors derive from ValueError so callers catching ValueError keep working.
"""
from __future__ import annotations


class FragilityToolkitError(ValueError):
    """Base class for every error raised by the toolkit."""


class DimensionError(FragilityToolkitError):
    """Matrix shapes do not agree with the declared partition or system size."""


class NotSymmetricError(FragilityToolkitError):
    pass


class NotPsdError(FragilityToolkitError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class NoiseModelError(FragilityToolkitError):
    """Noise matrix Phi is outside the admissible class or Phi22 is not negative definite."""


class UnboundedSetError(FragilityToolkitError):
    """The consistent-system set is unbounded (rank-deficient data)."""


class InvalidCertificateError(FragilityToolkitError):
    """(P, alpha) does not satisfy Gamma > 0 and Theta > 0."""


class SolverFailure(FragilityToolkitError):
    """Every configured conic solver failed on the problem."""


class FileFormatError(FragilityToolkitError):
    """An input file does not match its schema."""
