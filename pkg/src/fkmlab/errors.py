"""Exception types raised by the verification lab."""


class FkmError(Exception):
    """Base class for all lab errors."""


class InvalidArgument(FkmError, ValueError):
    pass


class InvalidFkmPair(InvalidArgument):
    """(m, k) gives l - m - 1 <= 0, so there is no FKM hypersurface."""


class FocalDegeneracy(FkmError):
    """Point lies on (or numerically too close to) a focal variety."""


class WrongVariety(FkmError):
    pass


class RankDeficiency(FkmError):
    pass


class NewtonDivergence(FkmError):
    pass


class WrongCount(FkmError):
    """Critical-point enumeration found an unexpected number of points."""

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points or []


class DegenerateParameter(FkmError):
    """A q1/q2 parameter is not generic enough for the normal-geodesic method."""
