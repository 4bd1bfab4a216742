"""Exception hierarchy and the explicit markers used in place of NaN."""

import enum


class GearFlankError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometryError(GearFlankError, ValueError):
    pass


class InvalidFeedError(GearFlankError, ValueError):
    pass


class InvalidParamsError(GearFlankError, ValueError):
    pass


class EmptyEnvelopeError(GearFlankError):
    """No pass reached some (or all) cells of the flank grid."""


class FitFailureError(GearFlankError):
    pass


class FilterLengthError(GearFlankError, ValueError):
    pass


class NoFeaturesError(GearFlankError):
    """Raised when a parameter needs peaks/crossings/summits and there are none."""


class InsufficientDataError(GearFlankError, ValueError):
    pass


class DegenerateCurveError(GearFlankError):
    pass


class UndefinedAnisotropyError(GearFlankError, ValueError):
    pass


class EmptyWindowError(GearFlankError, ValueError):
    pass


class ProbeFitError(GearFlankError, ValueError):
    pass


class ParseError(GearFlankError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ComparisonError(GearFlankError, ValueError):
    pass


class ConfigError(GearFlankError, ValueError):
    pass


class Missing(enum.Enum):
    """Marker stored instead of a number when a parameter has no value."""

    UNDEFINED = "undefined"
    NOT_REACHED = "not-reached"

    def __repr__(self):
        return f"Missing.{self.name}"


UNDEFINED = Missing.UNDEFINED
NOT_REACHED = Missing.NOT_REACHED
