"""
Similarity scores between saliency maps: NSS, ROC area (point- and map-based) and
Pearson correlation.

All statistics over pixels are population statistics. AUC values are computed
exactly from midranks (Mann-Whitney U with ties counted one half).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .base import (
    AllPixelsPositiveError, DegenerateMapError, DimensionMismatchError, NoPointsError,
    ParameterError, PointOutOfBoundsError, in_bounds, nearest_pixel
)
from .fixmap import SaliencyMap

DEFAULT_TOP_FRAC = 0.2

logger = logging.getLogger(__name__)


class MetricKind(Enum):
    """
    Similarity metrics.
    """
    NSS = "nss"
    """
    Normalized Scanpath Saliency: mean of the z-scored map at fixated pixels.
    """
    AUC_POINTS = "auc-points"
    """
    ROC area of the map as a classifier of fixated pixels against all other pixels.
    """
    AUC_MAPS = "auc-maps"
    """
    ROC area of a candidate map against the top quantile of a reference map.
    """
    PCC = "pcc"
    """Pearson correlation coefficient over all pixels."""

    @property
    def uses_points(self) -> bool:
        """True for metrics that evaluate raw gaze points rather than a second map."""
        return self in (MetricKind.NSS, MetricKind.AUC_POINTS)


@dataclass(frozen=True)
class MetricScore:
    """
    One similarity score.

    Attributes:
        kind (MetricKind): Metric that produced the score.
        value (float): Score value.
        n_support (int): Number of fixations, or of pixels for PCC.
    """
    kind: MetricKind
    value: float
    n_support: int


def _check_dims(a: SaliencyMap, b: SaliencyMap):
    if a.dims != b.dims:
        raise DimensionMismatchError(
            "maps have different dimensions: {} vs {}".format(a.dims, b.dims))


def _rank_sum_auc(ranks: np.ndarray, positives: np.ndarray) -> float:
    # positives: distinct flat pixel indices
    n_pos = positives.size
    n_neg = ranks.size - n_pos
    u_stat = ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_stat / (n_pos * n_neg))


class MapFeatures:
    """
    A saliency map with lazily computed derived fields (z-scores, midranks,
    top-quantile masks) so that one map can be scored against many others
    without recomputing them.
    """

    def __init__(self, saliency_map: SaliencyMap):
        self.map = saliency_map
        self.flat = saliency_map.values.ravel()
        self._masks = {}
        self._top_pixels = {}

    @property
    def dims(self) -> tuple[int, int]:
        return self.map.dims

    @cached_property
    def is_constant(self) -> bool:
        return bool(self.flat.max() == self.flat.min())

    @cached_property
    def zscore(self) -> np.ndarray:
        """
        Pixel-wise `(value - mean) / std` with population std, flattened.

        Raises:
            DegenerateMapError: The map is constant.
        """
        if self.is_constant:
            raise DegenerateMapError("map has zero variance")
        mean = self.flat.mean()
        std = self.flat.std()
        return (self.flat - mean) / std

    @cached_property
    def ranks(self) -> np.ndarray:
        """Midranks of the flattened values (ties share the average rank)."""
        return rankdata(self.flat, method="average")

    def top_mask(self, top_frac: float) -> np.ndarray:
        """
        Pixels at or above the nearest-rank `(1 - top_frac)` quantile.

        When the quantile falls on the map minimum (a large flat background),
        only the pixels strictly above the minimum are kept.

        Raises:
            ParameterError: `top_frac` outside (0, 1).
            DegenerateMapError: The map is constant.
        """
        if not 0 < top_frac < 1:
            raise ParameterError("top_frac must be in (0, 1), got {}".format(top_frac))
        if top_frac not in self._masks:
            if self.is_constant:
                raise DegenerateMapError("reference map is constant")
            rank = max(int(math.ceil((1.0 - top_frac) * self.flat.size)), 1)
            threshold = np.partition(self.flat, rank - 1)[rank - 1]
            if threshold == self.flat.min():
                logger.debug("top %.3f quantile falls on the map minimum", top_frac)
                mask = self.flat > threshold
            else:
                mask = self.flat >= threshold
            mask.setflags(write=False)
            self._masks[top_frac] = mask
        return self._masks[top_frac]

    def top_pixels(self, top_frac: float) -> np.ndarray:
        """Flat indices of the pixels selected by `top_mask`."""
        if top_frac not in self._top_pixels:
            self._top_pixels[top_frac] = np.flatnonzero(self.top_mask(top_frac))
        return self._top_pixels[top_frac]

    def fixation_pixels(self, fixations: list) -> np.ndarray:
        """
        Flat pixel indices of fixations, one per fixation (duplicates kept).

        Raises:
            NoPointsError: No fixation given.
            PointOutOfBoundsError: A fixation lies outside the grid.
        """
        if not fixations:
            raise NoPointsError("no fixations to evaluate")
        width, height = self.dims
        indices = np.empty(len(fixations), dtype=np.intp)
        for i, (x, y) in enumerate(fixations):
            if not in_bounds(x, y, width, height):
                raise PointOutOfBoundsError(
                    "fixation ({}, {}) is outside the {}x{} grid".format(x, y, width, height))
            col, row = nearest_pixel(x, y, width, height)
            indices[i] = row * width + col
        return indices

    def pcc(self, other: "MapFeatures") -> MetricScore:
        _check_dims(self.map, other.map)
        value = float(np.dot(self.zscore, other.zscore)) / self.flat.size
        return MetricScore(MetricKind.PCC, min(max(value, -1.0), 1.0), self.flat.size)

    def nss(self, fixations: list) -> MetricScore:
        return self.nss_at(self.fixation_pixels(fixations))

    def nss_at(self, indices: np.ndarray) -> MetricScore:
        """NSS at flat pixel indices from `fixation_pixels`."""
        value = float(self.zscore[indices].mean())
        return MetricScore(MetricKind.NSS, value, int(indices.size))

    def auc_points(self, fixations: list) -> MetricScore:
        return self.auc_points_at(self.fixation_pixels(fixations))

    def auc_points_at(self, indices: np.ndarray) -> MetricScore:
        """Point-based AUC at flat pixel indices from `fixation_pixels`."""
        positives = np.unique(indices)
        if positives.size == self.flat.size:
            raise AllPixelsPositiveError("fixations cover every pixel")
        return MetricScore(
            MetricKind.AUC_POINTS, _rank_sum_auc(self.ranks, positives), int(indices.size))

    def auc_maps(self, reference: "MapFeatures", top_frac: float = DEFAULT_TOP_FRAC) -> MetricScore:
        _check_dims(self.map, reference.map)
        positives = reference.top_pixels(top_frac)
        return MetricScore(
            MetricKind.AUC_MAPS, _rank_sum_auc(self.ranks, positives), int(positives.size))

    def prepare(self, kind: MetricKind, top_frac: float = DEFAULT_TOP_FRAC, reference: bool = True):
        """
        Compute up front the derived fields `kind` needs from this map,
        so that later scoring only reads them.

        Args:
            kind (MetricKind): Metric the map will be scored with.
            top_frac (float, optional): Quantile for `MetricKind.AUC_MAPS`.
            reference (bool, optional): Whether the map plays the reference (second)
                role; for `MetricKind.AUC_MAPS` that means its top mask is needed,
                otherwise its ranks.
        """
        if kind is MetricKind.PCC or kind is MetricKind.NSS:
            _ = self.zscore
        elif kind is MetricKind.AUC_POINTS:
            _ = self.ranks
        elif reference:
            self.top_pixels(top_frac)
        else:
            _ = self.ranks
        return self


def pcc(a: SaliencyMap, b: SaliencyMap) -> MetricScore:
    """
    Pearson linear correlation between two maps over all pixels.

    Raises:
        DimensionMismatchError: Maps differ in size.
        DegenerateMapError: A map is constant.

    Examples:
        ```
        score = pcc(actor_map, viewer_map)
        print(score.value)
        ```
    """
    _check_dims(a, b)
    return MapFeatures(a).pcc(MapFeatures(b))


def nss(saliency_map: SaliencyMap, fixations: list) -> MetricScore:
    """
    Normalized Scanpath Saliency: the mean of the z-scored map at the fixated pixels.

    Fixation coordinates are rounded half away from zero to the nearest pixel.

    Args:
        saliency_map (SaliencyMap): Map to evaluate.
        fixations (list[(float, float)]): Fixations `(x, y)` inside the grid.

    Returns:
        MetricScore: Score with `n_support` equal to the number of fixations.

    Raises:
        DegenerateMapError: The map is constant.
        NoPointsError: No fixation given.
        PointOutOfBoundsError: A fixation lies outside the grid.
    """
    return MapFeatures(saliency_map).nss(fixations)


def auc_points(saliency_map: SaliencyMap, fixations: list) -> MetricScore:
    """
    ROC area of the map separating fixated pixels (positives) from every other pixel.

    Equals the probability that a random positive pixel outranks a random negative
    one, ties counting one half.

    Raises:
        NoPointsError: No fixation given.
        PointOutOfBoundsError: A fixation lies outside the grid.
        AllPixelsPositiveError: Fixations cover the whole grid.
    """
    return MapFeatures(saliency_map).auc_points(fixations)


def auc_maps(
        candidate: SaliencyMap, reference: SaliencyMap, top_frac: float = DEFAULT_TOP_FRAC
    ) -> MetricScore:
    """
    ROC area of `candidate` against the binarized `reference`: reference pixels at or
    above its nearest-rank `(1 - top_frac)` quantile are the positives.

    Args:
        candidate (SaliencyMap): Map whose values rank the pixels.
        reference (SaliencyMap): Map providing the labels.
        top_frac (float, optional): Fraction of reference pixels labelled positive.

    Returns:
        MetricScore: Score with `n_support` equal to the number of positive pixels.

    Raises:
        DimensionMismatchError: Maps differ in size.
        DegenerateMapError: The reference map is constant.
    """
    _check_dims(candidate, reference)
    return MapFeatures(candidate).auc_maps(MapFeatures(reference), top_frac)


def score(
        kind: MetricKind, candidate: Optional[SaliencyMap], reference: SaliencyMap,
        fixations: Optional[list] = None, top_frac: float = DEFAULT_TOP_FRAC
    ) -> MetricScore:
    """
    Compute any metric. Point-based metrics evaluate `fixations` on `reference`;
    map-based metrics compare `candidate` with `reference`.
    """
    if kind is MetricKind.NSS:
        return nss(reference, fixations or [])
    if kind is MetricKind.AUC_POINTS:
        return auc_points(reference, fixations or [])
    if kind is MetricKind.PCC:
        return pcc(candidate, reference)
    return auc_maps(candidate, reference, top_frac)
