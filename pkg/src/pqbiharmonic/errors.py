"""Exception hierarchy shared by the numerical modules."""


class DomainError(ValueError):
    """An argument lies outside the domain where the operation is defined."""


class IntegrationError(RuntimeError):
    """The initial value solver could not continue."""


class StiffnessError(IntegrationError):
    """Step size collapsed while the solution stayed bounded."""


class ShootingError(RuntimeError):
    """The shooting iteration failed to produce a simultaneous zero."""


class NoZeroFound(ShootingError):
    """A component stayed of one sign up to the end of the trajectory."""


class QuadratureError(RuntimeError):
    """A quadrature rule did not reach the requested tolerance."""
