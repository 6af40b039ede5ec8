"""Exception types shared across the package."""


class UltraskelError(Exception):
    """Base class for all package errors."""


class ValidationError(UltraskelError):
    """Input failed a structural or metric validity check."""


class AsymmetryError(ValidationError):
    def __init__(self, i, j):
        super().__init__(f"distance matrix not symmetric at ({i}, {j})")
        self.pair = (i, j)


class NegativeDistanceError(ValidationError):
    def __init__(self, i, j):
        super().__init__(f"negative or non-finite distance at ({i}, {j})")
        self.pair = (i, j)


class ZeroOffDiagonal(ValidationError):
    def __init__(self, i, j):
        super().__init__(f"zero distance between distinct points {i} and {j}")
        self.pair = (i, j)


class TriangleViolation(ValidationError):
    def __init__(self, x, y, z):
        super().__init__(f"triangle inequality fails: d({x},{y}) > d({x},{z}) + d({z},{y})")
        self.triple = (x, y, z)


class SinglePointSpace(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class DisconnectedGraph(ValidationError):
    pass


class DomainError(UltraskelError):
    """Parameter outside the mathematical domain of an operation."""


class ParamOutOfRange(UltraskelError):
    pass


class MTooSmall(ParamOutOfRange):
    """Leaf depth too shallow for the minimum pairwise distance."""


class HTooSmall(ParamOutOfRange):
    """Sparsification requires h >= 2*k**2."""


class DeltaOutOfRange(ParamOutOfRange):
    pass


class PreconditionViolation(UltraskelError):
    pass


class TooLarge(UltraskelError):
    """Instance exceeds the size bound of an exact/exhaustive routine."""


class Infeasible(UltraskelError):
    pass


# Fragmentation-map violations.

class RootNotFull(ValidationError):
    pass


class LeafNotSingleton(ValidationError):
    def __init__(self, v):
        super().__init__(f"leaf {v} does not carry a singleton cluster")
        self.vertex = v


class ChildNotSubset(ValidationError):
    def __init__(self, u, v):
        super().__init__(f"cluster of child {v} is not contained in cluster of {u}")
        self.pair = (u, v)


class OverlapIncomparable(ValidationError):
    def __init__(self, u, v):
        super().__init__(f"incomparable vertices {u} and {v} carry overlapping clusters")
        self.pair = (u, v)


class UnevenLeafDepth(ValidationError):
    pass


class DepthNotDivisible(ValidationError):
    pass


class NotSeparated(UltraskelError):
    pass


class NotSubadditive(UltraskelError):
    pass


class DegenerateRho(UltraskelError):
    pass


class SpecViolation(ValidationError):
    """A product-tree level description violates its own constraints."""


class AdmissibilityFailure(UltraskelError):
    pass


class ExpanderSamplingTimeout(UltraskelError):
    pass


class TooLargeForExact(TooLarge):
    pass
