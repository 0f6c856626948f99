"""Exception and warning types shared across the package."""


class DispersionLabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DispersionLabError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ValidationError(DispersionLabError, ValueError):
    """Malformed input data or configuration."""


class GridResolutionError(DispersionLabError, ValueError):
    """The spatial step is too coarse for the requested computation."""


class ConditioningError(DispersionLabError, ArithmeticError):
    """A linear system or fit is too ill-conditioned to trust."""


class ConvergenceRegionError(DomainError):
    """Parameter outside the region where the series/iteration converges."""


class NearResonanceError(DispersionLabError, ArithmeticError):
    """Wronskian too close to zero for a resolvent evaluation."""


class SizeError(DispersionLabError, ValueError):
    """Problem size exceeds a configured solver cap."""


class ContractViolationError(DispersionLabError, ValueError):
    """Caller broke an interface contract (mismatched grids, bad pairing)."""


class DivergenceWarning(UserWarning):
    """Quadrature failed to settle under repeated box doubling."""


class StabilityWarning(UserWarning):
    """Explicit SDE step large enough for mode-wise amplification."""


class AliasingWarning(UserWarning):
    """Spectral density sampled too coarsely for the smoothing width."""


class HypothesisViolationWarning(UserWarning):
    """An experiment was run on data violating its standing hypothesis."""
