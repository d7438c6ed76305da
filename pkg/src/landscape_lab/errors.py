"""Exception and warning types raised across the package."""


class LandscapeError(Exception):
    """Base class for every error raised by landscape_lab."""


class NonConvergence(LandscapeError):
    pass


class ZeroPolynomial(LandscapeError):
    pass


class PoleProximity(LandscapeError):
    pass


class DegreeOverflow(LandscapeError):
    pass


class AnnulusDegenerate(LandscapeError):
    """The critical set is a whole circle, so there is no finite answer."""


class BadParameters(LandscapeError, ValueError):
    pass


class SearchExhausted(LandscapeError):
    pass


class BoundViolation(LandscapeError, AssertionError):
    """A counting bound or Morse identity failed: this signals an implementation bug."""


class CapViolation(BoundViolation):
    pass


class UnresolvedTopology(LandscapeError):
    pass


class BranchAmbiguity(LandscapeError):
    pass


class ResolutionTooCoarse(LandscapeError, ValueError):
    pass


class ConfigParseError(LandscapeError):
    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ConfigValidationError(LandscapeError, ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class DegenerateCriticals(UserWarning):
    """Some critical point is degenerate; bound checks are reported but not asserted."""


class NonSmoothBoundary(UserWarning):
    pass


class UnivalenceWarning(UserWarning):
    pass
