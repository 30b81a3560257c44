"""Exception and warning types raised across rankme."""


class RankMEError(Exception):
    """Base class for all rankme errors."""


class SingularMatrix(RankMEError, ArithmeticError):
    pass


class NotSymmetric(RankMEError, ValueError):
    pass


class InsufficientData(RankMEError, ValueError):
    pass


class InvalidParameters(RankMEError, ValueError):
    pass


class DomainError(RankMEError, ValueError):
    pass


class DimensionMismatch(RankMEError, ValueError):
    pass


class QuadratureFailure(RankMEError, ArithmeticError):
    pass


class InfiniteFisherInfo(RankMEError, ArithmeticError):
    """The density has no finite Fisher information for location."""


class UnsupportedLaw(RankMEError, ValueError):
    """A law without finite variance was used where a covariance is needed."""


class OptimizerDivergence(RankMEError, RuntimeError):
    pass


class DegenerateDesign(RankMEError, ValueError):
    pass


class MonteCarloFailure(RankMEError, RuntimeError):
    """More than the allowed fraction of replications failed."""


class ConfigError(RankMEError, ValueError):
    """Invalid configuration document or command-line selection."""


class MalformedCsv(RankMEError, ValueError):
    pass


class TiesPresent(UserWarning):
    """Residuals contained exact ties; midranks were used."""
