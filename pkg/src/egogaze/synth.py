"""
Synthetic actor/viewer gaze-stream pairs with a known lag.

The actor's gaze follows an AR(1) process around the image center on each axis;
the viewer is a noisy copy of the actor delayed by `lag_frames`. All randomness
comes from NumPy's `Generator(PCG64(seed))`, so streams are pure functions of
their parameters.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .base import InvalidParamsError, LagTooLargeError, in_bounds
from .gaze_io import GazeSample, GazeStream, VideoMeta, frame_count, make_stream

logger = logging.getLogger(__name__)

DEFAULT_SMOOTHNESS = 0.9
DEFAULT_LAG_FRAMES = 10
DEFAULT_JITTER_SIGMA_PX = 10.0
SAMPLES_PER_FRAME = 2
SAMPLE_OFFSET_PX = 1.0
VIEWER_STREAM_KEY = 1


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SynthParams:
    """
    Parameters of a synthetic actor/viewer pair.

    Attributes:
        seed (int): Non-negative seed of the actor generator.
        n_frames (int): Number of video frames.
        meta (VideoMeta): Image dimensions and frame rate; its frame count is replaced
            by `n_frames`.
        smoothness (float): AR(1) coefficient of the gaze trajectory, in (0, 1).
        lag_frames (int): Frames the viewer lags behind the actor; checked against
            `n_frames` when the viewer is derived.
        jitter_sigma_px (float): Std of the Gaussian noise added to viewer samples.
        dropout_prob (float): Probability that an actor sample is invalid, in [0, 1).
    """
    seed: int = 0
    n_frames: int = 300
    meta: VideoMeta = field(default_factory=VideoMeta)
    smoothness: float = DEFAULT_SMOOTHNESS
    lag_frames: int = DEFAULT_LAG_FRAMES
    jitter_sigma_px: float = DEFAULT_JITTER_SIGMA_PX
    dropout_prob: float = 0.0

    def __post_init__(self):
        if self.seed < 0:
            raise InvalidParamsError("seed must be non-negative, got {}".format(self.seed))
        if self.n_frames < 1:
            raise InvalidParamsError("n_frames must be positive, got {}".format(self.n_frames))
        if not 0 < self.smoothness < 1:
            raise InvalidParamsError("smoothness must be in (0, 1), got {}".format(self.smoothness))
        if not math.isfinite(self.jitter_sigma_px) or self.jitter_sigma_px < 0:
            raise InvalidParamsError(
                "jitter_sigma_px must be non-negative, got {}".format(self.jitter_sigma_px))
        if not 0 <= self.dropout_prob < 1:
            raise InvalidParamsError(
                "dropout_prob must be in [0, 1), got {}".format(self.dropout_prob))
        if self.meta.n_frames != self.n_frames:
            meta = VideoMeta(self.meta.width_px, self.meta.height_px, self.meta.fps, self.n_frames)
            object.__setattr__(self, "meta", meta)


@dataclass(frozen=True)
class SyntheticPair:
    """
    Actor stream, viewer stream and the lag the viewer was built with.
    """
    actor: GazeStream
    viewer: GazeStream
    lag_frames: int


def _trajectory(rng: np.random.Generator, p: SynthParams) -> np.ndarray:
    center = np.array([p.meta.width_px / 2.0, p.meta.height_px / 2.0])
    stationary_std = np.array([p.meta.width_px / 6.0, p.meta.height_px / 6.0])
    innovation_std = stationary_std * math.sqrt(1.0 - p.smoothness ** 2)
    start = rng.normal(0.0, 1.0, size=2) * stationary_std
    noise = rng.normal(0.0, 1.0, size=(p.n_frames, 2)) * innovation_std
    gaze = np.empty((p.n_frames, 2))
    gaze[0] = center + start
    for t in range(1, p.n_frames):
        gaze[t] = center + p.smoothness * (gaze[t - 1] - center) + noise[t]
    return gaze


def generate_actor_stream(p: SynthParams) -> GazeStream:
    """
    Generate the actor's gaze stream: an AR(1) trajectory per axis with stationary
    std of width/6 and height/6 around the image center, two samples per frame
    offset by up to 1 px, clamped to the image, each sample dropped (marked invalid)
    with probability `dropout_prob`.

    Args:
        p (SynthParams): Generator parameters.

    Returns:
        GazeStream: Stream labelled "actor".

    Examples:
        ```
        params = SynthParams(seed=42, n_frames=300, meta=VideoMeta(160, 120, 15))
        actor = generate_actor_stream(params)
        ```
    """
    rng = _rng(p.seed)
    gaze = _trajectory(rng, p)
    offsets = rng.uniform(-SAMPLE_OFFSET_PX, SAMPLE_OFFSET_PX, size=(p.n_frames, SAMPLES_PER_FRAME, 2))
    dropped = rng.random(size=(p.n_frames, SAMPLES_PER_FRAME)) < p.dropout_prob
    high = np.array([p.meta.width_px - 1.0, p.meta.height_px - 1.0])
    points = np.clip(gaze[:, np.newaxis, :] + offsets, 0.0, high)
    samples = []
    for t in range(p.n_frames):
        for k in range(SAMPLES_PER_FRAME):
            t_s = (t + k / SAMPLES_PER_FRAME) / p.meta.fps
            samples.append(GazeSample(
                t, t_s, float(points[t, k, 0]), float(points[t, k, 1]), not dropped[t, k]))
    return make_stream(p.meta, samples, "actor")


def derive_viewer_stream(
        actor: GazeStream, lag_frames: int, jitter_sigma_px: float, seed: int
    ) -> GazeStream:
    """
    Build a viewer stream that sees, at frame t, the actor's samples of frame
    `t - lag_frames` with independent Gaussian jitter per axis, clamped to the image.
    Frames whose source frame is outside the video carry no sample.

    Args:
        actor (GazeStream): Actor stream.
        lag_frames (int): Viewer delay in frames; negative values make the viewer lead.
        jitter_sigma_px (float): Jitter std in pixels.
        seed (int): Non-negative seed of the jitter generator.

    Returns:
        GazeStream: Stream labelled "viewer".

    Raises:
        LagTooLargeError: `|lag_frames|` is not below the actor's frame count.
        InvalidParamsError: `jitter_sigma_px` is negative or not finite.
    """
    n_frames = frame_count(actor)
    if abs(lag_frames) >= n_frames:
        raise LagTooLargeError(
            "lag of {} frames needs a stream longer than {} frames".format(lag_frames, n_frames))
    if not math.isfinite(jitter_sigma_px) or jitter_sigma_px < 0:
        raise InvalidParamsError(
            "jitter_sigma_px must be non-negative, got {}".format(jitter_sigma_px))
    meta = actor.meta
    rng = _rng(seed)
    shift_s = lag_frames / meta.fps
    high_x, high_y = meta.width_px - 1.0, meta.height_px - 1.0
    samples = []
    for s in actor.samples:
        frame = s.frame_index + lag_frames
        if not 0 <= frame < n_frames:
            continue
        jx, jy = rng.normal(0.0, 1.0, size=2) * jitter_sigma_px
        x = float(np.clip(s.x_px + jx, 0.0, high_x))
        y = float(np.clip(s.y_px + jy, 0.0, high_y))
        valid = s.valid and in_bounds(x, y, meta.width_px, meta.height_px)
        samples.append(GazeSample(frame, s.t_s + shift_s, x, y, valid))
    logger.debug("derived viewer with lag %d from %d actor samples", lag_frames, len(actor))
    return make_stream(meta, samples, "viewer")


def viewer_seed(seed: int) -> int:
    """
    Seed of the viewer jitter generator paired with actor seed `seed`.
    """
    state = np.random.SeedSequence([seed, VIEWER_STREAM_KEY]).generate_state(1, np.uint64)
    return int(state[0])


def generate_pair(p: SynthParams) -> SyntheticPair:
    """
    Generate an actor stream and its lagged viewer copy.

    Raises:
        LagTooLargeError: `|p.lag_frames|` is not below `p.n_frames`.

    Examples:
        ```
        pair = generate_pair(SynthParams(seed=42, meta=VideoMeta(160, 120, 15)))
        print(pair.lag_frames)
        ```
    """
    actor = generate_actor_stream(p)
    viewer = derive_viewer_stream(actor, p.lag_frames, p.jitter_sigma_px, viewer_seed(p.seed))
    logger.info("generated synthetic pair: %d frames, lag %d", p.n_frames, p.lag_frames)
    return SyntheticPair(actor, viewer, p.lag_frames)
