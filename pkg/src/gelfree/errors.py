"""Exception and warning classes shared by the gelfree modules."""


class GelfreeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GelfreeError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class MeasureError(GelfreeError, ValueError):
    """Invalid initial measure, or a quadrature over it failed."""


class PastSingularityError(DomainError):
    """A closed-form characteristic was requested beyond its hitting time T(s)."""


class ConvergenceError(GelfreeError, RuntimeError):
    """A bracketed root finder could not locate or converge to a root."""


class OracleInconsistency(GelfreeError, RuntimeError):
    """The ODE oracle produced a path violating proven invariants (a bug)."""


class StalledError(GelfreeError, RuntimeError):
    """The particle system's total jump rate underflowed."""


class ExplosionDetected(GelfreeError, RuntimeError):
    """Runaway growth in the particle system (event or mean-mass cap hit).

    For ``k = 0`` this is the expected gelation signature, not a crash.
    """

    def __init__(self, message, sim_time=None, event_count=None, mean_mass=None):
        super().__init__(message)
        self.sim_time = sim_time
        self.event_count = event_count
        self.mean_mass = mean_mass


class InversionWarning(UserWarning):
    """Numerical Laplace inversion looks unstable (non-monotone CDF)."""
