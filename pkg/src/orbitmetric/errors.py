"""Exception types shared across the package."""


class OrbitMetricError(Exception):
    """Base class for all package errors."""


class OutOfDomain(OrbitMetricError, ValueError):
    pass


class InvalidParam(OrbitMetricError, ValueError):
    pass


class DesignFailure(OrbitMetricError, RuntimeError):
    """A constructive search did not produce a profile meeting its sign conditions."""


class InfeasibleParams(OrbitMetricError, ValueError):
    """Parameters violate a strict inequality required for the construction.

    ``constraint`` names the violated inequality.
    """

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class Singular(OrbitMetricError, ArithmeticError):
    """A curvature formula or metric inversion hit a degenerate point."""


class ConfigError(OrbitMetricError, ValueError):
    pass
