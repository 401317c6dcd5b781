"""Exception and warning types raised by shearwave."""


class ShearWaveError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(ShearWaveError, ValueError):
    """A square-root radicand is non-positive: lambda is inadmissible for this gamma and p."""


class NoDispersionRootError(ShearWaveError):
    """No sign change of the dispersion function was found on the search interval."""


class SingularDenominatorError(ShearWaveError):
    """The dispersion root collides with the pole g = gamma*sqrt(lambda)."""


class SingularCoefficientError(ShearWaveError, ZeroDivisionError):
    """A denominator of a closed-form expansion coefficient vanishes."""

    def __init__(self, name, value):
        super().__init__(f"denominator {name} vanishes ({value:.3e})")
        self.name = name
        self.value = value


class StagnationError(ShearWaveError):
    """h_p <= 0 somewhere, i.e. c - u <= 0 (flow reversal / stagnation)."""

    def __init__(self, message, q=None, p=None):
        super().__init__(message)
        self.q = q
        self.p = p


class UnreachableEpsilonError(ShearWaveError):
    """Residual norms stay below epsilon over the whole admissible amplitude range."""

    def __init__(self, epsilon, achievable):
        super().__init__(
            f"epsilon={epsilon:g} not reachable below the stagnation threshold; "
            f"largest achievable residual norm is {achievable:.6g}"
        )
        self.epsilon = epsilon
        self.achievable = achievable


class DegenerateFitError(ShearWaveError):
    """Residual norms underflow, so machine precision dominates the order fit."""


class ResonantModeError(ShearWaveError, ArithmeticError):
    """The Robin mode problem is (numerically) singular."""


class StagnationWarning(UserWarning):
    """Emitted when an evaluation finds h_p <= 0."""


class ConditioningWarning(UserWarning):
    """Emitted when a Vandermonde extraction has a large solve residual."""
