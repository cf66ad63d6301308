"""Exception types raised across the package.

Every error derives from ``ValueError`` so callers that only care about
"bad input" can catch one type.
"""

from __future__ import annotations


class RandLDPError(ValueError):
    """Base class for package errors."""


class DomainError(RandLDPError):
    """An argument lies outside the domain of a function."""


class SizeError(RandLDPError):
    """An object would be too large to materialize or enumerate."""


class PrivacyError(RandLDPError):
    """A key distribution or mechanism violates the declared privacy level."""


class ScheduleError(RandLDPError):
    """Invalid multi-level privacy schedule."""


class ConfigurationError(RandLDPError):
    """An experiment configuration is inconsistent."""


class EstimationError(RandLDPError):
    """An estimator cannot be evaluated on the supplied data."""


class ShapeError(RandLDPError):
    """Array shapes or row structure do not match what an operation needs."""


class InfeasibleError(RandLDPError):
    """No object with the requested properties exists."""


class ConstructionError(RandLDPError):
    """A construction failed its own verification step."""


class ContractError(RandLDPError):
    """A precondition of an operation does not hold."""
