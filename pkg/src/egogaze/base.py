"""
Helper classes and functions used by the other modules.
"""

import math


class GazeToolkitError(Exception):
    """
    Base class for all errors raised by the toolkit.
    """


class ParameterError(GazeToolkitError, ValueError):
    """
    A caller-supplied parameter violates the invariants of the type it configures.
    """


class DataError(GazeToolkitError):
    """
    Input data is degenerate or inconsistent, e.g. an empty log or a constant map.
    """


class InvalidMetaError(ParameterError):
    """Video metadata is invalid (non-positive dimensions or frame rate, unknown keys)."""


class InvalidKernelError(ParameterError):
    """Gaussian kernel parameters are invalid."""


class EmptyGridError(ParameterError):
    """The shift grid contains no shift."""


class TauNotInGridError(ParameterError):
    """A requested shift is not part of the sweep grid."""


class NOutOfRangeError(ParameterError):
    """The exact signed-rank distribution was requested for an unsupported sample size."""


class InvalidParamsError(ParameterError):
    """Synthetic generator parameters are invalid."""


class LagTooLargeError(ParameterError):
    """The requested lag is not smaller than the stream's frame count."""


class EmptyLogError(DataError):
    """The gaze log contains no data rows."""


class MalformedRowError(DataError):
    """
    A gaze log row has the wrong number of columns or an unparseable field.
    """

    def __init__(self, line_no: int, reason: str = "malformed row"):
        """
        Create new instance of the error.

        Args:
            line_no (int): 1-based line number of the offending row.
            reason (str, optional): Short description of the problem.
        """
        DataError.__init__(self, "line {}: {}".format(line_no, reason))
        self.line_no = line_no
        self.reason = reason


class PointOutOfBoundsError(DataError):
    """A gaze point lies outside the image grid."""


class NoPointsError(DataError):
    """An operation that needs at least one gaze point received none."""


class DimensionMismatchError(DataError):
    """Two maps that must share a grid have different dimensions."""


class DegenerateMapError(DataError):
    """A map has zero variance where a metric needs a non-constant map."""


class AllPixelsPositiveError(DataError):
    """Fixations cover every pixel, leaving no negatives for the ROC area."""


class MetaMismatchError(DataError):
    """Two gaze streams do not share image dimensions and frame rate."""


class NoComparableFramesError(DataError):
    """No (frame, shift) cell holds a score."""


class LengthMismatchError(DataError):
    """Paired samples have different lengths."""


class AllZeroDifferencesError(DataError):
    """Every paired difference is zero."""


class TooFewPairsError(DataError):
    """Too few nonzero differences for the normal approximation."""


def round_half_away(value: float) -> int:
    """
    Round to the nearest integer, halves away from zero.

    Args:
        value (float): Finite real number.

    Returns:
        int: Rounded value.

    Examples:
        ```
        round_half_away(2.5)   # 3
        round_half_away(-2.5)  # -3
        ```
    """
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def nearest_pixel(x: float, y: float, width: int, height: int) -> tuple[int, int]:
    """
    Map image coordinates to the nearest pixel, clamped to the grid.

    Args:
        x (float): Image-x coordinate in pixels.
        y (float): Image-y coordinate in pixels.
        width (int): Grid width.
        height (int): Grid height.

    Returns:
        (int, int): Column and row of the pixel.
    """
    col = min(max(round_half_away(x), 0), width - 1)
    row = min(max(round_half_away(y), 0), height - 1)
    return col, row


def in_bounds(x: float, y: float, width: int, height: int) -> bool:
    """
    Check that a point is finite and lies inside the image grid.
    """
    if not (math.isfinite(x) and math.isfinite(y)):
        return False
    return 0 <= x < width and 0 <= y < height
