"""Exception hierarchy shared by all torsionlab modules."""


class TorsionLabError(Exception):
    """Base class for every error raised by the package."""


class InvalidArgument(TorsionLabError, ValueError):
    pass


class DomainError(TorsionLabError, ValueError):
    """Argument outside the mathematical domain of a function."""


class OutOfDomain(DomainError):
    """Point lies outside the meshed region or the barrier's domain."""


class NotConvex(InvalidArgument):
    pass


class MeshingFailure(TorsionLabError, RuntimeError):
    pass


class SolverFailure(TorsionLabError, RuntimeError):
    pass


class IntegrationFailure(TorsionLabError, RuntimeError):
    pass


class SearchFailure(TorsionLabError, RuntimeError):
    pass


class FitFailure(TorsionLabError, RuntimeError):
    pass
