"""Exception hierarchy shared by all modules."""


class MonitoredTransportError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(MonitoredTransportError, ValueError):
    pass


class ConfigurationError(MonitoredTransportError, ValueError):
    pass


class QuadratureError(MonitoredTransportError):
    """Adaptive quadrature ran out of subdivisions.

    The best estimate and its error bound are kept so callers can decide
    whether a degraded result is usable.
    """

    def __init__(self, message, best=None, error=None, panels=None):
        super().__init__(message)
        self.best = best
        self.error = error
        self.panels = panels


class SingularGreensError(MonitoredTransportError):
    def __init__(self, omega, rcond):
        super().__init__(
            f"retarded Green's function is numerically singular at omega={omega!r} "
            f"(reciprocal condition number {rcond:.3e})"
        )
        self.omega = omega
        self.rcond = rcond


class NonContractiveMapError(MonitoredTransportError):
    pass


class IterationLimitError(MonitoredTransportError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class ConsistencyError(MonitoredTransportError):
    """An internal physical check (conservation, positivity) failed."""


class NoStoppingVoltageError(MonitoredTransportError):
    pass


class UndefinedCOPError(MonitoredTransportError):
    pass


class DegenerateDenominatorError(MonitoredTransportError):
    pass


class DegenerateDiscretizationError(MonitoredTransportError):
    pass
