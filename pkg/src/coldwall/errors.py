"""Exception types shared across coldwall."""


class ColdwallError(Exception):
    """Base class for library errors."""


class InvalidArgument(ColdwallError, ValueError):
    """An argument violates an operation's precondition."""


class DegenerateState(ColdwallError, ValueError):
    """The velocity coincides with the background velocity, so no collision
    direction or plane of influence is defined."""


class GrazingState(ColdwallError, ValueError):
    """A velocity with zero normal component: the particle neither advances
    nor returns, and the rates a_i / b_j are undefined."""


class DivergentIntegral(ColdwallError, ValueError):
    """The requested k-integral does not converge absolutely."""


class SingularConfiguration(ColdwallError, ValueError):
    """The integrand's 1/|xi - xi_1| singularity overlaps the mass of g."""


class QuadratureFailure(ColdwallError, RuntimeError):
    """Quadrature did not reach the requested tolerance within budget.

    The best estimate and its error bound are carried along so callers can
    decide whether the result is still usable.
    """

    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class ConfigError(ColdwallError, ValueError):
    """Invalid run configuration (CLI exit status 2)."""


class MissingInputs(ColdwallError, FileNotFoundError):
    """Files a report depends on are absent."""

    def __init__(self, paths):
        self.paths = [str(p) for p in paths]
        super().__init__("missing inputs: " + ", ".join(self.paths))
