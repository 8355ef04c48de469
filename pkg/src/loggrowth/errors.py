"""Exception types shared across the package."""


class LogGrowthError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LogGrowthError, ValueError):
    """Bad user-supplied configuration (unknown density id, invalid parameters)."""


class DomainError(LogGrowthError, ValueError):
    """Evaluation point outside the admissible domain."""


class NumericalError(LogGrowthError, RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class IllConditionedError(NumericalError):
    """The pole sits too close to a support endpoint for stable quadrature."""


class RootNotFoundError(NumericalError):
    """A bracketing root-finder found no sign change."""


class PersistenceError(RootNotFoundError):
    """The regularized minimizer left the basin (regularization too large)."""


class DegenerateKdeError(NumericalError):
    """KDE pair-weight denominator fell below the safety floor."""


class PhaseFailureError(LogGrowthError, RuntimeError):
    """The warm-up phase did not reach the target basin within its budget."""
