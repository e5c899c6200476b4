"""Semantic exceptions shared across the package."""


class LrpError(Exception):
    """Base class for package errors."""


class InvalidArgument(LrpError, ValueError):
    """Inputs violate an operation's contract."""


class DivergentIntegral(InvalidArgument):
    """Rectangle integral of |u - v|^-2 has infinite mass."""


class UnsupportedGeometry(InvalidArgument):
    """Window / terminal layout the condenser cannot realize exactly."""


class InvalidFlow(LrpError, ValueError):
    """Flow field violates antisymmetry or conservation."""


class SolverFailure(LrpError, RuntimeError):
    """Linear solve did not reach the requested residual."""


class DependencyError(LrpError, LookupError):
    """A required table entry (e.g. a quantile threshold) is missing."""


class InsufficientData(LrpError, ValueError):
    """Not enough finite data points for the requested fit."""
