"""Exception types raised across the package."""


class ResilnetError(Exception):
    """Base class for all package errors."""


class InputError(ResilnetError, ValueError):
    """Invalid user-supplied data (network documents, plans, arguments)."""


class NumericalError(ResilnetError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


# network documents
class EmptyLayer(InputError):
    pass


class MissingEdgeCost(InputError):
    pass


class NegativeVariance(InputError):
    pass


class DemandNotNormalized(InputError):
    pass


class UnknownEdge(InputError):
    pass


# planner
class NonPositiveAlpha(InputError):
    pass


class ZeroMatrix(InputError):
    pass


class NonAdjacentStep(InputError):
    pass


class ZeroPriorMass(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


# resilience
class DomainMismatch(InputError):
    pass


class NegativeEpsilon(InputError):
    pass


class ZeroVarianceMass(NumericalError):
    pass


# oracles
class QuadratureFailure(NumericalError):
    pass


class TooLarge(InputError):
    pass
