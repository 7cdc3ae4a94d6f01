"""
Parsing, validation and indexing of eye-tracker gaze logs and their video metadata.

The canonical log format is a CSV file with columns `frame,t_s,x_px,y_px,valid`
(an optional header line is detected and skipped). Video metadata is given either as
a compact `width=640,height=480,fps=15,frames=3600` string or as a sidecar file with
one `key=value` pair per line.
"""

import bisect
import csv
import io
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Union

from .base import (
    EmptyLogError, InvalidMetaError, MalformedRowError, MetaMismatchError, in_bounds
)

logger = logging.getLogger(__name__)

DEFAULT_FPS = 15
DEFAULT_WIDTH = 640
DEFAULT_HEIGHT = 480
HEADER = ("frame", "t_s", "x_px", "y_px", "valid")
META_KEYS = {"width": "width_px", "height": "height_px", "fps": "fps",
             "frames": "n_frames", "n_frames": "n_frames"}


@dataclass(frozen=True)
class VideoMeta:
    """
    Resolution, frame rate and length of the video a gaze stream belongs to.

    Attributes:
        width_px (int): Frame width in pixels.
        height_px (int): Frame height in pixels.
        fps (float): Frames per second.
        n_frames (int): Number of frames, or 0 when unknown.
    """
    width_px: int = DEFAULT_WIDTH
    height_px: int = DEFAULT_HEIGHT
    fps: float = DEFAULT_FPS
    n_frames: int = 0

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise InvalidMetaError(
                "image dimensions must be positive, got {}x{}".format(self.width_px, self.height_px))
        if not math.isfinite(self.fps) or self.fps <= 0:
            raise InvalidMetaError("fps must be positive and finite, got {}".format(self.fps))
        if self.n_frames < 0:
            raise InvalidMetaError("n_frames must be non-negative, got {}".format(self.n_frames))

    @property
    def dims(self) -> tuple[int, int]:
        """(width, height) of the image grid."""
        return self.width_px, self.height_px

    @property
    def frame_duration_ms(self) -> float:
        """Duration of one frame in milliseconds."""
        return 1000.0 / self.fps

    def same_geometry(self, other: "VideoMeta") -> bool:
        """
        Check that two videos share image dimensions and frame rate
        (the frame count is allowed to differ).
        """
        return self.dims == other.dims and self.fps == other.fps


@dataclass(frozen=True)
class GazeSample:
    """
    One gaze location reported by the eye tracker.
    """
    frame_index: int
    t_s: float
    x_px: float
    y_px: float
    valid: bool = True


@dataclass(frozen=True)
class GazeStream:
    """
    Time-ordered gaze samples of one subject watching (or recording) one video.

    Streams are immutable once built; use `parse_gaze_log` or `make_stream`
    to get the samples sorted.
    """
    meta: VideoMeta
    samples: tuple[GazeSample, ...] = ()
    label: str = ""

    @cached_property
    def _frame_keys(self) -> list[int]:
        return [s.frame_index for s in self.samples]

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ValidationReport:
    """
    Sample counts of a gaze stream.
    """
    total: int
    valid: int
    invalid: int
    frames_with_no_valid_sample: int


def _sort_key(sample: GazeSample) -> tuple[int, float]:
    return sample.frame_index, sample.t_s


def make_stream(meta: VideoMeta, samples, label: str = "") -> GazeStream:
    """
    Build a stream from samples in any order, stable-sorting them by `(frame_index, t_s)`.

    Args:
        meta (VideoMeta): Video the samples belong to.
        samples (iterable of GazeSample): Samples.
        label (str, optional): Free-text stream identifier, e.g. "actor" or "viewer-07".

    Returns:
        GazeStream: Sorted stream.
    """
    return GazeStream(meta, tuple(sorted(samples, key=_sort_key)), label)


def parse_meta(text: str) -> VideoMeta:
    """
    Parse video metadata from `key=value` pairs separated by commas or newlines.

    Lines starting with `#` are comments. Recognized keys are `width`, `height`, `fps`
    and `frames` (or `n_frames`); `fps` may be a rational such as `30000/1001`.

    Args:
        text (str): Metadata text.

    Returns:
        VideoMeta: Parsed metadata.

    Raises:
        InvalidMetaError: Unknown, duplicate, missing or unparseable keys.

    Examples:
        ```
        meta = parse_meta("width=640,height=480,fps=15")
        print(meta.frame_duration_ms)
        ```
    """
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        for item in line.split(","):
            item = item.strip()
            if not item:
                continue
            key, sep, value = item.partition("=")
            key = key.strip().lower()
            if not sep or key not in META_KEYS:
                raise InvalidMetaError("unknown metadata entry '{}'".format(item))
            name = META_KEYS[key]
            if name in values:
                raise InvalidMetaError("duplicate metadata key '{}'".format(key))
            values[name] = value.strip()
    for required in ("width_px", "height_px", "fps"):
        if required not in values:
            raise InvalidMetaError("missing metadata key '{}'".format(required.split("_")[0]))
    try:
        return VideoMeta(
            width_px=int(values["width_px"]),
            height_px=int(values["height_px"]),
            fps=float(Fraction(values["fps"])),
            n_frames=int(values.get("n_frames", 0)))
    except (ValueError, ZeroDivisionError) as err:
        raise InvalidMetaError("unparseable metadata: {}".format(err)) from err


def read_meta_file(path: str) -> VideoMeta:
    """
    Read video metadata from a sidecar `key=value` file. See `parse_meta`.
    """
    with open(path, "r", encoding="utf-8") as file:
        return parse_meta(file.read())


def _decode(raw_text: Union[bytes, str]) -> str:
    if isinstance(raw_text, str):
        return raw_text
    try:
        return raw_text.decode("utf-8")
    except UnicodeDecodeError as err:
        line_no = raw_text.count(b"\n", 0, err.start) + 1
        raise MalformedRowError(line_no, "not valid UTF-8") from err


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_row(fields: list[str], line_no: int, meta: VideoMeta) -> GazeSample:
    if len(fields) != len(HEADER):
        raise MalformedRowError(
            line_no, "expected {} columns, got {}".format(len(HEADER), len(fields)))
    frame_text, t_text, x_text, y_text, valid_text = [f.strip() for f in fields]
    try:
        frame_index = int(frame_text)
        t_s = float(t_text)
        x_px = float(x_text)
        y_px = float(y_text)
    except ValueError as err:
        raise MalformedRowError(line_no, "unparseable numeric field") from err
    if valid_text not in ("0", "1"):
        raise MalformedRowError(line_no, "valid flag must be 0 or 1")
    if frame_index < 0:
        raise MalformedRowError(line_no, "negative frame index")
    if meta.n_frames > 0 and frame_index >= meta.n_frames:
        raise MalformedRowError(
            line_no, "frame {} beyond video length {}".format(frame_index, meta.n_frames))
    if not math.isfinite(t_s):
        raise MalformedRowError(line_no, "non-finite timestamp")
    valid = valid_text == "1" and in_bounds(x_px, y_px, meta.width_px, meta.height_px)
    return GazeSample(frame_index, t_s, x_px, y_px, valid)


def parse_gaze_log(raw_text: Union[bytes, str], meta: VideoMeta, label: str = "") -> GazeStream:
    """
    Parse a canonical gaze CSV log.

    Parsing is strict: any malformed row aborts. Samples whose coordinates are outside
    the image or not finite are kept but marked invalid.

    Args:
        raw_text (bytes or str): UTF-8 log content.
        meta (VideoMeta): Metadata of the video the log was recorded on.
        label (str, optional): Stream identifier.

    Returns:
        GazeStream: Samples stable-sorted by `(frame_index, t_s)`.

    Raises:
        EmptyLogError: The log has no data rows.
        MalformedRowError: A row has the wrong column count or an unparseable field.

    Examples:
        ```
        meta = VideoMeta(640, 480, 15)
        stream = parse_gaze_log(b"frame,t,x,y,valid\\n0,0.000,320,240,1\\n", meta, "actor")
        print(len(stream))
        ```
    """
    text = _decode(raw_text)
    samples = []
    first_row = True
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = next(csv.reader([line]))
        if first_row:
            first_row = False
            if fields and not _is_number(fields[0].strip()):
                continue
        samples.append(_parse_row(fields, line_no, meta))
    if not samples:
        raise EmptyLogError("gaze log has no data rows")
    stream = make_stream(meta, samples, label)
    logger.info("parsed %d gaze samples for '%s'", len(stream), label)
    return stream


def read_gaze_log(path: str, meta: VideoMeta, label: Optional[str] = None) -> GazeStream:
    """
    Read and parse a gaze CSV file. See `parse_gaze_log`.

    Args:
        path (str): File path.
        meta (VideoMeta): Video metadata.
        label (str, optional): Stream identifier; defaults to the path.

    Returns:
        GazeStream: Parsed stream.
    """
    with open(path, "rb") as file:
        return parse_gaze_log(file.read(), meta, path if label is None else label)


def format_gaze_log(stream: GazeStream) -> str:
    """
    Serialize a stream to the canonical CSV format: header line, frame as integer,
    `t_s` with 6 decimals, coordinates with 3 decimals, valid as 0/1.
    """
    buff = io.StringIO()
    writer = csv.writer(buff, lineterminator="\n")
    writer.writerow(HEADER)
    for s in stream.samples:
        writer.writerow([
            s.frame_index, "{:.6f}".format(s.t_s), "{:.3f}".format(s.x_px),
            "{:.3f}".format(s.y_px), 1 if s.valid else 0])
    return buff.getvalue()


def write_gaze_log(stream: GazeStream, path: str):
    """
    Write a stream to `path` in the canonical CSV format.
    """
    with open(path, "w", encoding="utf-8", newline="") as file:
        file.write(format_gaze_log(stream))
    logger.info("wrote %d gaze samples to %s", len(stream), path)


def frame_count(stream: GazeStream) -> int:
    """
    Number of frames covered by a stream: the video length if known,
    otherwise one past the largest sampled frame index.
    """
    if stream.meta.n_frames > 0:
        return stream.meta.n_frames
    if not stream.samples:
        return 0
    return stream.samples[-1].frame_index + 1


def samples_for_frame(stream: GazeStream, frame: int, window: int = 0) -> list[tuple[float, float]]:
    """
    Collect the valid gaze points recorded within `window` frames of `frame`.

    Args:
        stream (GazeStream): Gaze stream.
        frame (int): Center frame.
        window (int, optional): Half-width of the frame window.

    Returns:
        list[(float, float)]: `(x_px, y_px)` of valid samples with frame index
        in `[frame - window, frame + window]`, in stream order. May be empty.
    """
    keys = stream._frame_keys
    lo = bisect.bisect_left(keys, frame - window)
    hi = bisect.bisect_right(keys, frame + window)
    return [(s.x_px, s.y_px) for s in stream.samples[lo:hi] if s.valid]


def validate_stream(stream: GazeStream) -> ValidationReport:
    """
    Count valid and invalid samples, and frames that carry no valid sample.

    Examples:
        ```
        report = validate_stream(stream)
        print(report.invalid / report.total)
        ```
    """
    total = len(stream.samples)
    valid_frames = {s.frame_index for s in stream.samples if s.valid}
    valid = sum(1 for s in stream.samples if s.valid)
    n_frames = frame_count(stream)
    empty = sum(1 for f in range(n_frames) if f not in valid_frames)
    return ValidationReport(total, valid, total - valid, empty)


def merge_streams(streams: list, label: str = "pooled") -> GazeStream:
    """
    Pool the samples of several streams recorded on the same video, e.g. all viewers
    of one clip, so that one aggregated map is built per frame.

    Args:
        streams (list[GazeStream]): Streams sharing image dimensions and frame rate.
        label (str, optional): Label of the merged stream.

    Returns:
        GazeStream: Merged stream. Its frame count is the largest of the inputs.

    Raises:
        MetaMismatchError: Streams differ in dimensions or frame rate.
    """
    if not streams:
        raise MetaMismatchError("no streams to merge")
    first = streams[0].meta
    for stream in streams[1:]:
        if not first.same_geometry(stream.meta):
            raise MetaMismatchError(
                "cannot merge '{}' into '{}': video metadata differs".format(
                    stream.label, streams[0].label))
    counts = [s.meta.n_frames for s in streams]
    n_frames = 0 if 0 in counts else max(counts)
    meta = VideoMeta(first.width_px, first.height_px, first.fps, n_frames)
    samples = [sample for stream in streams for sample in stream.samples]
    return make_stream(meta, samples, label)
