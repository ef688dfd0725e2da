"""Exception types shared across the package."""


class SampledFPCAError(Exception):
    """Base class for all package-specific errors."""


class InvalidPointsError(SampledFPCAError, ValueError):
    """Sampling points are unsorted, duplicated, or out of the valid range."""


class SingularGramError(SampledFPCAError, ValueError):
    """A Gram matrix that must be positive definite failed to factor."""


class RepresentationMismatchError(SampledFPCAError, TypeError):
    """A function representation cannot be evaluated under the given operator."""


class NotOrthonormalError(SampledFPCAError, ValueError):
    """A matrix expected to have orthonormal columns does not."""


class IllConditionedGramError(SampledFPCAError, ValueError):
    """An L2 Gram matrix is too ill-conditioned to orthonormalize reliably."""


class EigenFailureError(SampledFPCAError, RuntimeError):
    """The symmetric eigensolver failed to converge."""


class BracketFailureError(SampledFPCAError, RuntimeError):
    """No feasible Lagrange multiplier was found within the bracket search span."""


class DegenerateFitError(SampledFPCAError, ValueError):
    """A regression fit is degenerate (e.g. constant abscissae)."""


class NoSolutionError(SampledFPCAError, RuntimeError):
    """A fixed-point / root problem has no solution in the searched interval."""


class ConfigError(SampledFPCAError, ValueError):
    """An experiment or operator configuration is invalid."""
