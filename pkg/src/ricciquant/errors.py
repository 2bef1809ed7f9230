"""Exception types raised across the package."""


class MissingInvolution(ValueError):
    """A symmetric-couple check needs an involution and none was supplied."""


class RankAmbiguous(RuntimeError):
    """No clear singular-value gap separates the numerical null space."""


class NotSkewsymmetric(ValueError):
    pass


class WrongSpaceTag(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class BoundaryMassError(ValueError):
    """Input does not decay on the grid boundary; enlarge the domain or window."""


class CostLimit(RuntimeError):
    pass


class ScheduleTooAggressive(RuntimeError):
    pass
