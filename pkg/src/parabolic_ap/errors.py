"""Exception hierarchy shared by all modules."""


class ParabolicError(ValueError):
    """Base class for every error raised by the package."""


class BoxOutsideDomain(ParabolicError):
    pass


class DegenerateBox(ParabolicError):
    pass


class NonpositiveWeight(ParabolicError):
    pass


class GridMismatch(ParabolicError):
    pass


class EmptyFamily(ParabolicError):
    pass


class UncoveredGrid(ParabolicError):
    pass


class ExponentRange(ParabolicError):
    pass


class ZeroIntegrand(ParabolicError):
    pass


class DivergentSeries(ParabolicError):
    pass


class CZero(ParabolicError):
    pass


class RHIFailure(ParabolicError):
    pass


class BadParams(ParabolicError):
    pass
