"""Exception hierarchy shared across the package."""


class SpdKummerError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SpdKummerError, ValueError):
    """Malformed argument: wrong shape, rank mismatch, non-finite entries."""


class NotSPDError(InvalidInputError):
    """Matrix failed positive-definiteness certification."""


class ConvergenceError(SpdKummerError, RuntimeError):
    """Iterative routine did not converge within its sweep budget."""


class DomainError(InvalidInputError):
    """Argument lies outside the domain of a special function or law."""


class UnsupportedParametersError(InvalidInputError):
    """Parameters are valid for the law but not supported by the sampler."""


class SamplerAbortError(SpdKummerError, RuntimeError):
    """Rejection sampler acceptance fell below the configured floor."""


class BoundaryViolationError(SpdKummerError, ArithmeticError):
    """A transform produced a matrix outside the open SPD cone."""


class IllPosedFitError(SpdKummerError, ValueError):
    """Least-squares design matrix is rank deficient."""


class DegenerateInputError(InvalidInputError):
    """Features are constant, so the statistic is undefined."""


class ExperimentInvalidError(SpdKummerError, RuntimeError):
    """Too many draws were discarded for the experiment to be meaningful."""
