"""
Tools for comparing where the wearer of a head-mounted camera looked with where
viewers of the recorded video look, across time shifts between the two.
"""

from .base import GazeToolkitError, ParameterError, DataError
from .gaze_io import VideoMeta, GazeSample, GazeStream, ValidationReport
from .gaze_io import parse_meta, read_meta_file, parse_gaze_log, read_gaze_log, write_gaze_log
from .gaze_io import samples_for_frame, validate_stream, merge_streams, frame_count
from .fixmap import KernelParams, SaliencyMap, splat_gaussian, build_fixation_map, map_for_frame
from .fixmap import write_pgm, read_pgm, write_map_csv, read_map_csv
from .simmetrics import MetricKind, MetricScore, MapFeatures, nss, auc_points, auc_maps, pcc, score
from .shift import ShiftGrid, SweepSummary, ShiftSweepResult, shift_sweep, sweep_metrics, best_shift
from .shift import paired_scores, write_histogram
from .shift import average_sweeps, score_histogram, frames_to_ms, write_report, write_scores, load_scores
from .stats import Alternative, Method, WilcoxonResult, wilcoxon_signed_rank, exact_signed_rank_cdf
from .synth import SynthParams, SyntheticPair, generate_actor_stream, derive_viewer_stream, generate_pair
