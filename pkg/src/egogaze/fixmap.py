"""
Dense saliency maps built from sparse gaze points.

Each gaze point contributes an isotropic Gaussian evaluated directly over a square
footprint of half-width `truncate_radius_px` around the nearest pixel; contributions
are summed pixel-wise and the sum is normalized to unit mass. Kernel mass falling
outside the image is clipped.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import (
    InvalidKernelError, NoPointsError, PointOutOfBoundsError, in_bounds, nearest_pixel
)
from .gaze_io import GazeStream, samples_for_frame

logger = logging.getLogger(__name__)

DEFAULT_SIGMA_PX = 25.0
TRUNCATE_SIGMAS = 3
PGM_MAXVAL = 65535
NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class KernelParams:
    """
    Gaussian kernel used to splat gaze points.

    Attributes:
        sigma_px (float): Standard deviation in pixels. The default of 25 px is about
            2 degrees of visual angle for 640x480 video at desktop viewing distance.
        truncate_radius_px (int, optional): Kernel half-width; `ceil(3 * sigma_px)`
            when omitted.
    """
    sigma_px: float = DEFAULT_SIGMA_PX
    truncate_radius_px: Optional[int] = None

    def __post_init__(self):
        if not math.isfinite(self.sigma_px) or self.sigma_px <= 0:
            raise InvalidKernelError("sigma_px must be positive, got {}".format(self.sigma_px))
        if self.truncate_radius_px is None:
            object.__setattr__(
                self, "truncate_radius_px", int(math.ceil(TRUNCATE_SIGMAS * self.sigma_px)))
        if self.truncate_radius_px < 1:
            raise InvalidKernelError(
                "truncate_radius_px must be at least 1, got {}".format(self.truncate_radius_px))


@dataclass(frozen=True)
class SaliencyMap:
    """
    Dense non-negative field over the image grid, stored row-major as `values[y, x]`
    in double precision. The array is read-only.
    """
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise ValueError("saliency map must be a non-empty 2-D array")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def width_px(self) -> int:
        return self.values.shape[1]

    @property
    def height_px(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> tuple[int, int]:
        """(width, height) of the grid."""
        return self.width_px, self.height_px

    def total(self) -> float:
        return float(self.values.sum())


def _check_point(dims: tuple[int, int], point: tuple[float, float]):
    if not in_bounds(point[0], point[1], dims[0], dims[1]):
        raise PointOutOfBoundsError(
            "point ({}, {}) is outside the {}x{} grid".format(point[0], point[1], dims[0], dims[1]))


def _footprint(dims: tuple[int, int], point: tuple[float, float], params: KernelParams):
    """
    Evaluate one Gaussian over its clipped footprint.

    Returns:
        (slice, slice, numpy.ndarray): Row slice, column slice and kernel values.
    """
    width, height = dims
    x, y = point
    col, row = nearest_pixel(x, y, width, height)
    radius = params.truncate_radius_px
    x0, x1 = max(col - radius, 0), min(col + radius, width - 1)
    y0, y1 = max(row - radius, 0), min(row + radius, height - 1)
    dx = np.arange(x0, x1 + 1, dtype=np.float64) - x
    dy = np.arange(y0, y1 + 1, dtype=np.float64) - y
    dist2 = dy[:, np.newaxis] ** 2 + dx[np.newaxis, :] ** 2
    patch = np.exp(-dist2 / (2.0 * params.sigma_px ** 2))
    return slice(y0, y1 + 1), slice(x0, x1 + 1), patch


def splat_gaussian(
        dims: tuple[int, int], point: tuple[float, float], params: KernelParams = KernelParams()
    ) -> SaliencyMap:
    """
    Place a single unnormalized Gaussian on an empty grid.

    Args:
        dims ((int, int)): Grid `(width, height)`.
        point ((float, float)): Gaze point `(x, y)` inside the grid.
        params (KernelParams, optional): Kernel parameters.

    Returns:
        SaliencyMap: Unnormalized map; 1.0 at the point itself when it falls on a pixel center.

    Raises:
        PointOutOfBoundsError: The point is outside the grid.

    Examples:
        ```
        splat = splat_gaussian((640, 480), (320, 240), KernelParams(25.0))
        print(splat.values.max())
        ```
    """
    _check_point(dims, point)
    values = np.zeros((dims[1], dims[0]), dtype=np.float64)
    rows, cols, patch = _footprint(dims, point, params)
    values[rows, cols] = patch
    return SaliencyMap(values, normalized=False)


def build_fixation_map(
        points: list, dims: tuple[int, int], params: KernelParams = KernelParams()
    ) -> SaliencyMap:
    """
    Build a normalized fixation map from gaze points by summing one Gaussian per point.

    Points are accumulated sequentially in input order, so identical inputs
    always give bit-identical maps.

    Args:
        points (list[(float, float)]): Gaze points `(x, y)`, all inside the grid.
        dims ((int, int)): Grid `(width, height)`.
        params (KernelParams, optional): Kernel parameters.

    Returns:
        SaliencyMap: Map whose values sum to 1.

    Raises:
        NoPointsError: `points` is empty.
        PointOutOfBoundsError: A point is outside the grid.

    Examples:
        ```
        fixmap = build_fixation_map([(100, 80), (104, 82)], (640, 480))
        print(fixmap.total())
        ```
    """
    if not points:
        raise NoPointsError("cannot build a fixation map without gaze points")
    for point in points:
        _check_point(dims, point)
    acc = np.zeros((dims[1], dims[0]), dtype=np.float64)
    for point in points:
        rows, cols, patch = _footprint(dims, point, params)
        acc[rows, cols] += patch
    return SaliencyMap(acc / acc.sum(), normalized=True)


def map_for_frame(
        stream: GazeStream, frame: int, window: int = 0, params: KernelParams = KernelParams()
    ) -> Optional[SaliencyMap]:
    """
    Build the saliency map of one frame from the valid samples within `window` frames.

    Returns:
        SaliencyMap or None: Normalized map, or None when the window holds no valid gaze.
    """
    points = samples_for_frame(stream, frame, window)
    if not points:
        return None
    return build_fixation_map(points, stream.meta.dims, params)


def to_pgm_bytes(saliency_map: SaliencyMap) -> bytes:
    """
    Encode a map as a binary 16-bit PGM (P5) image, scaled so that the map maximum
    becomes 65535. Samples are stored big-endian.
    """
    peak = saliency_map.values.max()
    if peak > 0:
        scaled = np.rint(saliency_map.values * (PGM_MAXVAL / peak))
    else:
        scaled = np.zeros_like(saliency_map.values)
    pixels = np.clip(scaled, 0, PGM_MAXVAL).astype(">u2")
    header = "P5\n{} {}\n{}\n".format(saliency_map.width_px, saliency_map.height_px, PGM_MAXVAL)
    return header.encode("ascii") + pixels.tobytes()


def write_pgm(saliency_map: SaliencyMap, path: str):
    """
    Write a map as a 16-bit PGM image for visualization. See `to_pgm_bytes`.
    """
    with open(path, "wb") as file:
        file.write(to_pgm_bytes(saliency_map))
    logger.info("wrote %dx%d PGM to %s", saliency_map.width_px, saliency_map.height_px, path)


def read_pgm(path: str) -> np.ndarray:
    """
    Read a binary 16-bit PGM written by `write_pgm`.

    Returns:
        numpy.ndarray: `uint16` pixel array of shape `(height, width)`.
    """
    with open(path, "rb") as file:
        buff = file.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while buff[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not buff[pos:pos + 1].isspace():
            pos += 1
        tokens.append(buff[start:pos])
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != b"P5" or maxval != PGM_MAXVAL:
        raise ValueError("{} is not a 16-bit binary PGM".format(path))
    data = np.frombuffer(buff, dtype=">u2", count=width * height, offset=pos + 1)
    return data.reshape(height, width).astype(np.uint16)


def write_map_csv(saliency_map: SaliencyMap, path: str):
    """
    Write a map losslessly as CSV: one row per image row, values with 17 significant digits.
    """
    np.savetxt(path, saliency_map.values, fmt="%.17g", delimiter=",")
    logger.info("wrote %dx%d map CSV to %s", saliency_map.width_px, saliency_map.height_px, path)


def read_map_csv(path: str) -> SaliencyMap:
    """
    Read a map written by `write_map_csv`. The result is flagged normalized
    when its values sum to 1 within 1e-9.
    """
    values = np.loadtxt(path, dtype=np.float64, delimiter=",", ndmin=2)
    normalized = abs(values.sum() - 1.0) <= NORMALIZATION_TOLERANCE
    return SaliencyMap(values, normalized=bool(normalized))
