"""
Time-shift sweep between an actor's and a viewer's gaze streams.

For every evaluated actor frame t and shift tau, the actor at t is compared with the
viewer at t + tau (positive tau: the viewer lags the actor). Per-cell scores are
collected into a (frame, tau) matrix, with NaN marking absent cells, and summarized
per shift.
"""

import concurrent.futures
import contextlib
import csv
import io
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import (
    DataError, EmptyGridError, MalformedRowError, MetaMismatchError, NoComparableFramesError, ParameterError,
    TauNotInGridError, in_bounds, nearest_pixel
)
from .fixmap import KernelParams, map_for_frame
from .gaze_io import GazeStream, frame_count, samples_for_frame
from .simmetrics import DEFAULT_TOP_FRAC, MapFeatures, MetricKind

logger = logging.getLogger(__name__)

DEFAULT_TAU_MIN = -20
DEFAULT_TAU_MAX = 20
BLOCK_FRAMES = 16
REPORT_HEADER = ("tau_frames", "tau_ms", "metric", "mean", "std", "n")
SCORES_HEADER = ("frame", "tau_frames", "metric", "score")
HISTOGRAM_HEADER = ("tau_frames", "tau_ms", "metric", "bin_lo", "bin_hi", "count")


def frames_to_ms(frames: float, fps: float) -> float:
    """
    Convert a frame count to milliseconds: `frames * 1000 / fps`.

    Examples:
        ```
        frames_to_ms(10, 15)  # 666.666...
        ```
    """
    return frames * 1000.0 / fps


@dataclass(frozen=True)
class ShiftGrid:
    """
    Shifts to sweep, in frames: `tau_min, tau_min + step, ..., <= tau_max`.
    """
    tau_min: int = DEFAULT_TAU_MIN
    tau_max: int = DEFAULT_TAU_MAX
    step: int = 1

    def __post_init__(self):
        if self.step < 1:
            raise EmptyGridError("grid step must be positive, got {}".format(self.step))
        if self.tau_min > self.tau_max:
            raise EmptyGridError(
                "empty grid: tau_min {} > tau_max {}".format(self.tau_min, self.tau_max))

    @property
    def taus(self) -> list[int]:
        return list(range(self.tau_min, self.tau_max + 1, self.step))

    def index(self, tau: int) -> int:
        """
        Column of `tau` in score matrices.

        Raises:
            TauNotInGridError: `tau` is not a grid point.
        """
        offset = tau - self.tau_min
        if offset < 0 or tau > self.tau_max or offset % self.step:
            raise TauNotInGridError("shift {} is not in the grid {}".format(tau, self))
        return offset // self.step


@dataclass(frozen=True)
class SweepSummary:
    """
    Per-shift aggregates of a sweep (or of several averaged sweeps).

    Attributes:
        grid (ShiftGrid): Swept shifts.
        metric (MetricKind): Metric used.
        fps (float): Frame rate, for converting shifts to milliseconds.
        per_tau_mean (numpy.ndarray): Mean score per shift (NaN where no score).
        per_tau_std (numpy.ndarray): Population std per shift.
        per_tau_n (numpy.ndarray): Number of scores per shift.
    """
    grid: ShiftGrid
    metric: MetricKind
    fps: float
    per_tau_mean: np.ndarray
    per_tau_std: np.ndarray
    per_tau_n: np.ndarray

    def tau_ms(self, tau: int) -> float:
        return frames_to_ms(tau, self.fps)


@dataclass(frozen=True)
class ShiftSweepResult(SweepSummary):
    """
    Full sweep outcome: the aggregates plus the per-cell scores.

    Attributes:
        frames (numpy.ndarray): Evaluated actor frames, one per score row.
        scores (numpy.ndarray): Matrix of shape `(len(frames), len(grid.taus))`;
            NaN marks absent cells.
    """
    frames: np.ndarray = None
    scores: np.ndarray = None


def _aggregate(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_taus = scores.shape[1]
    means = np.full(n_taus, np.nan)
    stds = np.full(n_taus, np.nan)
    counts = np.zeros(n_taus, dtype=np.int64)
    for j in range(n_taus):
        column = scores[:, j]
        present = column[~np.isnan(column)]
        counts[j] = present.size
        if present.size:
            means[j] = present.mean()
            stds[j] = present.std()
    return means, stds, counts


def make_result(
        grid: ShiftGrid, metric: MetricKind, fps: float, frames, scores: np.ndarray
    ) -> ShiftSweepResult:
    """
    Wrap a score matrix into a `ShiftSweepResult`, computing the per-shift aggregates.
    """
    scores = np.asarray(scores, dtype=np.float64)
    means, stds, counts = _aggregate(scores)
    return ShiftSweepResult(
        grid, metric, fps, means, stds, counts, np.asarray(frames, dtype=np.int64), scores)


class _SerialExecutor:
    def map(self, func, items):
        return map(func, items)


class _CellScorer:
    """
    Builds per-frame map features for both sides of a sweep, once for all metrics,
    and scores cells.
    """

    def __init__(self, actor, viewer, metrics, params, top_frac, window):
        self.actor = actor
        self.viewer = viewer
        self.metrics = metrics
        self.params = params
        self.top_frac = top_frac
        self.window = window
        self.needs_points = any(m.uses_points for m in metrics)
        self.needs_map = not all(m.uses_points for m in metrics)

    def viewer_side(self, frame: int) -> Optional[MapFeatures]:
        saliency_map = map_for_frame(self.viewer, frame, self.window, self.params)
        if saliency_map is None:
            return None
        return self._prepared(MapFeatures(saliency_map), reference=True)

    def actor_side(self, frame: int) -> tuple:
        """Flat fixation indices and map features of the actor (None where absent)."""
        indices = features = None
        if self.needs_points:
            points = samples_for_frame(self.actor, frame, self.window)
            if points:
                width, height = self.actor.meta.dims
                indices = _fixation_indices(points, width, height, frame)
        if self.needs_map:
            saliency_map = map_for_frame(self.actor, frame, self.window, self.params)
            if saliency_map is not None:
                features = self._prepared(MapFeatures(saliency_map), reference=False)
        return indices, features

    def _prepared(self, features: MapFeatures, reference: bool) -> MapFeatures:
        for metric in self.metrics:
            try:
                features.prepare(metric, self.top_frac, reference)
            except DataError as err:
                # scoring re-raises per cell, where it is logged and skipped
                logger.debug("degenerate map: %s", err)
        return features

    def cell(self, metric: MetricKind, actor_side: tuple, viewer_side: MapFeatures) -> float:
        indices, features = actor_side
        if metric is MetricKind.NSS:
            return viewer_side.nss_at(indices).value
        if metric is MetricKind.AUC_POINTS:
            return viewer_side.auc_points_at(indices).value
        if metric is MetricKind.PCC:
            return features.pcc(viewer_side).value
        return features.auc_maps(viewer_side, self.top_frac).value

    def row(self, frame: int, taus: list, viewer_cache: dict) -> np.ndarray:
        values = np.full((len(self.metrics), len(taus)), np.nan)
        actor_side = self.actor_side(frame)
        indices, features = actor_side
        for i, metric in enumerate(self.metrics):
            if (indices if metric.uses_points else features) is None:
                continue
            for j, tau in enumerate(taus):
                viewer_side = viewer_cache.get(frame + tau)
                if viewer_side is None:
                    continue
                try:
                    values[i, j] = self.cell(metric, actor_side, viewer_side)
                except DataError as err:
                    logger.debug("%s cell (%d, %d) skipped: %s", metric.value, frame, tau, err)
        return values


def _fixation_indices(points: list, width: int, height: int, frame: int) -> Optional[np.ndarray]:
    indices = np.empty(len(points), dtype=np.intp)
    for i, (x, y) in enumerate(points):
        if not in_bounds(x, y, width, height):
            logger.debug("frame %d: gaze (%s, %s) outside the grid, points skipped", frame, x, y)
            return None
        col, row = nearest_pixel(x, y, width, height)
        indices[i] = row * width + col
    return indices


def sweep_metrics(
        actor: GazeStream, viewer: GazeStream, metrics: list,
        grid: ShiftGrid = ShiftGrid(), params: KernelParams = KernelParams(),
        frame_step: int = 1, top_frac: float = DEFAULT_TOP_FRAC, window: int = 0,
        workers: int = 1
    ) -> dict:
    """
    Sweep several metrics at once. Each per-frame map is built and prepared a single
    time and scored with every metric, so the result for each metric is the one
    `shift_sweep` gives for it alone.

    Args:
        actor (GazeStream): Actor stream (fixed in time).
        viewer (GazeStream): Viewer stream (shifted in time).
        metrics (list[MetricKind]): Metrics to score, without duplicates.
        grid (ShiftGrid, optional): Shifts to sweep.
        params (KernelParams, optional): Gaussian kernel for map building.
        frame_step (int, optional): Evaluate every `frame_step`-th actor frame.
        top_frac (float, optional): Reference quantile for `MetricKind.AUC_MAPS`.
        window (int, optional): Frame half-window (>= 0) used to collect gaze for each map.
        workers (int, optional): Threads used to build maps and score rows. Results
            are identical for any value.

    Returns:
        dict[MetricKind, ShiftSweepResult]: One result per metric, in `metrics` order.

    Raises:
        MetaMismatchError: Streams differ in image dimensions or frame rate.
        ParameterError: Invalid `metrics`, `frame_step`, `top_frac`, `window` or `workers`.
        NoComparableFramesError: Some metric could not score any cell.

    Examples:
        ```
        results = sweep_metrics(actor, viewer, list(MetricKind), params=KernelParams(10))
        for metric, result in results.items():
            print(metric.value, best_shift(result))
        ```
    """
    if not actor.meta.same_geometry(viewer.meta):
        raise MetaMismatchError(
            "actor {} @ {} fps and viewer {} @ {} fps differ".format(
                actor.meta.dims, actor.meta.fps, viewer.meta.dims, viewer.meta.fps))
    metrics = [MetricKind(m) for m in metrics]
    if not metrics or len(set(metrics)) != len(metrics):
        raise ParameterError("metrics must be a non-empty list without duplicates")
    if frame_step < 1:
        raise ParameterError("frame_step must be positive, got {}".format(frame_step))
    if not 0 < top_frac < 1:
        raise ParameterError("top_frac must be in (0, 1), got {}".format(top_frac))
    if window < 0:
        raise ParameterError("window must be non-negative, got {}".format(window))
    if workers < 1:
        raise ParameterError("workers must be positive, got {}".format(workers))
    taus = grid.taus
    n_actor = frame_count(actor)
    n_viewer = frame_count(viewer)
    frames = list(range(0, n_actor, frame_step))
    scores = np.full((len(metrics), len(frames), len(taus)), np.nan)
    scorer = _CellScorer(actor, viewer, metrics, params, top_frac, window)
    viewer_cache = {}

    if workers > 1:
        pool_context = concurrent.futures.ThreadPoolExecutor(max_workers=workers)
    else:
        pool_context = contextlib.nullcontext(_SerialExecutor())
    with pool_context as pool:
        for start in range(0, len(frames), BLOCK_FRAMES):
            block = frames[start:start + BLOCK_FRAMES]
            needed = sorted({
                t + tau for t in block for tau in taus
                if 0 <= t + tau < n_viewer and t + tau not in viewer_cache})
            for frame, features in zip(needed, pool.map(scorer.viewer_side, needed)):
                viewer_cache[frame] = features
            rows = pool.map(lambda t: scorer.row(t, taus, viewer_cache), block)
            for offset, row in enumerate(rows):
                scores[:, start + offset] = row
            if start + BLOCK_FRAMES < len(frames):
                horizon = frames[start + BLOCK_FRAMES] + taus[0]
                for frame in [f for f in viewer_cache if f < horizon]:
                    del viewer_cache[frame]

    results = {}
    for i, metric in enumerate(metrics):
        result = make_result(grid, metric, actor.meta.fps, frames, scores[i])
        if not result.per_tau_n.any():
            raise NoComparableFramesError(
                "no comparable frames between '{}' and '{}' for {}".format(
                    actor.label, viewer.label, metric.value))
        logger.info(
            "swept %d frames x %d shifts with %s: %d scored cells",
            len(frames), len(taus), metric.value, int(result.per_tau_n.sum()))
        results[metric] = result
    return results


def shift_sweep(
        actor: GazeStream, viewer: GazeStream, metric: MetricKind = MetricKind.AUC_MAPS,
        grid: ShiftGrid = ShiftGrid(), params: KernelParams = KernelParams(),
        frame_step: int = 1, top_frac: float = DEFAULT_TOP_FRAC, window: int = 0,
        workers: int = 1
    ) -> ShiftSweepResult:
    """
    Score the actor's frame t against the viewer's frame t + tau for every evaluated
    frame and every shift of the grid.

    The actor map is the first argument of map-based metrics (`MetricKind.PCC`,
    `MetricKind.AUC_MAPS`); point-based metrics (`MetricKind.NSS`,
    `MetricKind.AUC_POINTS`) evaluate the actor's raw gaze points on the viewer's map.
    Cells where t + tau leaves the viewer's video, or where either side has no gaze,
    are absent.

    Args:
        actor (GazeStream): Actor stream (fixed in time).
        viewer (GazeStream): Viewer stream (shifted in time).
        metric (MetricKind, optional): Similarity metric.
        grid (ShiftGrid, optional): Shifts to sweep.
        params (KernelParams, optional): Gaussian kernel for map building.
        frame_step (int, optional): Evaluate every `frame_step`-th actor frame.
        top_frac (float, optional): Reference quantile for `MetricKind.AUC_MAPS`.
        window (int, optional): Frame half-window (>= 0) used to collect gaze for each map.
        workers (int, optional): Threads used to build maps and score rows. Results
            are identical for any value.

    Returns:
        ShiftSweepResult: Score matrix and per-shift aggregates.

    Raises:
        MetaMismatchError: Streams differ in image dimensions or frame rate.
        ParameterError: Invalid `frame_step`, `top_frac`, `window` or `workers`.
        NoComparableFramesError: No cell could be scored.

    Examples:
        ```
        pair = generate_pair(SynthParams(seed=42, meta=VideoMeta(160, 120, 15)))
        result = shift_sweep(pair.actor, pair.viewer, MetricKind.PCC, params=KernelParams(10))
        print(best_shift(result))
        ```
    """
    metric = MetricKind(metric)
    return sweep_metrics(
        actor, viewer, [metric], grid, params, frame_step, top_frac, window, workers)[metric]


def best_shift(result: SweepSummary) -> tuple[int, float]:
    """
    Shift with the highest mean score.

    Only shifts supported by at least half the largest per-shift count compete.
    Ties go to the smallest |tau|, then to the positive shift.

    Returns:
        (int, float): Best shift in frames and its mean score.

    Raises:
        NoComparableFramesError: No shift has any score.
    """
    counts = np.asarray(result.per_tau_n)
    if counts.size == 0 or counts.max() <= 0:
        raise NoComparableFramesError("sweep has no scored shift")
    floor = counts.max() / 2.0
    candidates = [
        (tau, float(result.per_tau_mean[j]))
        for j, tau in enumerate(result.grid.taus)
        if counts[j] > 0 and counts[j] >= floor]
    tau, mean = min(candidates, key=lambda c: (-c[1], abs(c[0]), -c[0]))
    return tau, mean


def paired_scores(result: ShiftSweepResult, tau_a: int, tau_b: int) -> tuple[list, list]:
    """
    Per-frame scores at two shifts, restricted to frames where both are present.

    Returns:
        (list[float], list[float]): Scores at `tau_a` and at `tau_b`, in frame order.

    Raises:
        TauNotInGridError: A shift is not in the grid.
        NoComparableFramesError: No frame has both scores.
    """
    col_a = result.scores[:, result.grid.index(tau_a)]
    col_b = result.scores[:, result.grid.index(tau_b)]
    both = ~np.isnan(col_a) & ~np.isnan(col_b)
    if not both.any():
        raise NoComparableFramesError(
            "no frame has scores at both shifts {} and {}".format(tau_a, tau_b))
    return col_a[both].tolist(), col_b[both].tolist()


def average_sweeps(results: list) -> SweepSummary:
    """
    Average several sweeps (e.g. one per video) by the simple mean of their per-shift
    means. `per_tau_n` then counts the sweeps contributing to each shift and
    `per_tau_std` is the spread across sweeps.

    Raises:
        MetaMismatchError: Sweeps differ in grid, metric or frame rate.
        NoComparableFramesError: `results` is empty.
    """
    if not results:
        raise NoComparableFramesError("no sweeps to average")
    first = results[0]
    for other in results[1:]:
        if (other.grid, other.metric, other.fps) != (first.grid, first.metric, first.fps):
            raise MetaMismatchError("sweeps differ in grid, metric or frame rate")
    means = np.vstack([np.where(r.per_tau_n > 0, r.per_tau_mean, np.nan) for r in results])
    per_tau_mean, per_tau_std, per_tau_n = _aggregate(means)
    return SweepSummary(first.grid, first.metric, first.fps, per_tau_mean, per_tau_std, per_tau_n)


def score_histogram(
        result: ShiftSweepResult, bins: int = 20, value_range: Optional[tuple] = None
    ) -> tuple[np.ndarray, np.ndarray]:
    """
    Histogram of per-frame scores for every shift, on shared bin edges.

    Args:
        result (ShiftSweepResult): Sweep result.
        bins (int, optional): Number of bins.
        value_range ((float, float), optional): Histogram range; defaults to [0, 1]
            for AUC, [-1, 1] for PCC and the observed range for NSS.

    Returns:
        (numpy.ndarray, numpy.ndarray): Bin edges, and counts of shape `(n_taus, bins)`.

    Raises:
        ParameterError: `bins` is not positive.
    """
    if bins < 1:
        raise ParameterError("bins must be positive, got {}".format(bins))
    present = result.scores[~np.isnan(result.scores)]
    if value_range is None:
        if result.metric in (MetricKind.AUC_MAPS, MetricKind.AUC_POINTS):
            value_range = (0.0, 1.0)
        elif result.metric is MetricKind.PCC:
            value_range = (-1.0, 1.0)
        elif present.size:
            value_range = (float(present.min()), float(present.max()))
        else:
            value_range = (0.0, 1.0)
        if value_range[0] == value_range[1]:
            value_range = (value_range[0] - 0.5, value_range[1] + 0.5)
    edges = np.histogram_bin_edges(present, bins=bins, range=value_range)
    counts = np.zeros((len(result.grid.taus), bins), dtype=np.int64)
    for j in range(len(result.grid.taus)):
        column = result.scores[:, j]
        counts[j], _ = np.histogram(column[~np.isnan(column)], bins=edges)
    return edges, counts


def _fmt(value: float) -> str:
    return "{:.6f}".format(value)


def format_report(summaries: list) -> str:
    """
    Render sweep summaries as the report CSV: one row per (metric, shift) with
    columns `tau_frames,tau_ms,metric,mean,std,n`.
    """
    buff = io.StringIO()
    writer = csv.writer(buff, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for summary in summaries:
        for j, tau in enumerate(summary.grid.taus):
            writer.writerow([
                tau, _fmt(summary.tau_ms(tau)), summary.metric.value,
                _fmt(summary.per_tau_mean[j]), _fmt(summary.per_tau_std[j]),
                int(summary.per_tau_n[j])])
    return buff.getvalue()


def write_report(summaries: list, path: str):
    """
    Write the report CSV of `format_report` to `path`.
    """
    with open(path, "w", encoding="utf-8", newline="") as file:
        file.write(format_report(summaries))
    logger.info("wrote sweep report to %s", path)


def write_scores(results: list, path: str):
    """
    Write per-frame scores in long format (`frame,tau_frames,metric,score`),
    absent cells included as `nan`.
    """
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(SCORES_HEADER)
        for result in results:
            for i, frame in enumerate(result.frames):
                for j, tau in enumerate(result.grid.taus):
                    writer.writerow([
                        int(frame), tau, result.metric.value, _fmt(result.scores[i, j])])
    logger.info("wrote per-frame scores to %s", path)


def load_scores(path: str, metric: Optional[MetricKind] = None, fps: float = 15.0) -> ShiftSweepResult:
    """
    Rebuild a sweep result from a file written by `write_scores`.

    Args:
        path (str): Scores CSV.
        metric (MetricKind, optional): Metric to load; required when the file holds several.
        fps (float, optional): Frame rate for millisecond conversions.

    Returns:
        ShiftSweepResult: Result with recomputed aggregates.

    Raises:
        ParameterError: The file holds several metrics and none was selected,
            or the selected one is missing.
        DataError: The file is empty or its shifts do not form a regular grid.
    """
    cells = {}
    with open(path, "r", encoding="utf-8", newline="") as file:
        reader = csv.reader(file)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCORES_HEADER:
            raise DataError("{} is not a scores file".format(path))
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                kind = MetricKind(row[2].strip())
                cells.setdefault(kind, {})[(int(row[0]), int(row[1]))] = float(row[3])
            except (ValueError, IndexError) as err:
                raise MalformedRowError(line_no, str(err)) from err
    if not cells:
        raise DataError("{} holds no scores".format(path))
    if metric is None:
        if len(cells) > 1:
            raise ParameterError(
                "{} holds several metrics; select one of {}".format(
                    path, ", ".join(k.value for k in cells)))
        metric = next(iter(cells))
    if metric not in cells:
        raise ParameterError("{} holds no {} scores".format(path, metric.value))
    entries = cells[metric]
    frames = sorted({frame for frame, _ in entries})
    taus = sorted({tau for _, tau in entries})
    steps = {b - a for a, b in zip(taus, taus[1:])}
    if len(steps) > 1:
        raise DataError("shifts in {} do not form a regular grid".format(path))
    grid = ShiftGrid(taus[0], taus[-1], steps.pop() if steps else 1)
    scores = np.full((len(frames), len(taus)), np.nan)
    rows = {frame: i for i, frame in enumerate(frames)}
    for (frame, tau), value in entries.items():
        scores[rows[frame], grid.index(tau)] = value
    return make_result(grid, metric, fps, frames, scores)


def write_histogram(results: list, path: str, bins: int = 20):
    """
    Write the per-shift score histograms of `score_histogram` as CSV,
    one block of rows per sweep result.

    Raises:
        ParameterError: `bins` is not positive; nothing is written.
    """
    histograms = [score_histogram(result, bins) for result in results]
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(HISTOGRAM_HEADER)
        for result, (edges, counts) in zip(results, histograms):
            for j, tau in enumerate(result.grid.taus):
                for b in range(bins):
                    writer.writerow([
                        tau, _fmt(result.tau_ms(tau)), result.metric.value,
                        _fmt(edges[b]), _fmt(edges[b + 1]), int(counts[j, b])])
    logger.info("wrote score histogram to %s", path)
