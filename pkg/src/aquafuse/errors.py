"""Exception hierarchy.

Every operational failure raises a subclass of AquafuseError so callers can
catch library errors without masking programming mistakes (TypeError etc.).
"""


class AquafuseError(Exception):
    pass


# geometry
class NonPositiveDepth(AquafuseError):
    pass


class NonPositiveDisparity(AquafuseError):
    pass


class NoConvergence(AquafuseError):
    pass


class DegenerateCalibration(AquafuseError):
    pass


# acoustic
class NegativeInterval(AquafuseError):
    pass


class ZeroVector(AquafuseError):
    pass


# segmentation / masks
class EmptyMask(AquafuseError):
    pass


class DegenerateBox(AquafuseError):
    pass


class DimensionMismatch(AquafuseError):
    pass


class OutOfFrame(AquafuseError):
    pass


class ProviderUnavailable(AquafuseError):
    pass


class UnknownShapeClass(AquafuseError):
    pass


# fusion
class AlphaOutOfRange(AquafuseError):
    pass


class NonPositiveGroundTruth(AquafuseError):
    pass


class EmptyGrid(AquafuseError):
    pass


class BothErrorsZero(AquafuseError):
    pass


class EmptyHistory(AquafuseError):
    pass


# ekf
class NonPositiveDt(AquafuseError):
    pass


class NegativeVariance(AquafuseError):
    pass


class SingularInnovation(AquafuseError):
    pass


# simulator / config
class ParseError(AquafuseError):
    pass


class ValidationError(AquafuseError):
    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class OutOfWindow(AquafuseError):
    pass


# pipeline
class StaleTimestamp(AquafuseError):
    pass


# metrics
class EmptyTrace(AquafuseError):
    pass
