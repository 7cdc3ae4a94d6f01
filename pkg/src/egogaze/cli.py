"""
Command-line interface of the toolkit.

Subcommands:
    map       Render the saliency map of one frame (PGM and/or lossless CSV).
    sweep     Sweep time shifts between an actor and one or more viewers.
    batch     Sweep several actor/viewer pairs and average across them.
    wilcoxon  Signed-rank test on paired scores.
    synth     Generate a synthetic actor/viewer pair with a known lag.
    validate  Count valid and invalid samples of a gaze log.

Exit status: 0 success, 1 I/O failure, 2 degenerate or inconsistent data, 64 usage error.
"""

import argparse
import csv
import logging
import os
import re
import sys
from typing import Optional

from .base import DataError, MalformedRowError, ParameterError
from .fixmap import DEFAULT_SIGMA_PX, KernelParams, map_for_frame, write_map_csv, write_pgm
from .gaze_io import (
    VideoMeta, merge_streams, parse_meta, read_gaze_log, read_meta_file, validate_stream,
    write_gaze_log
)
from .shift import (
    DEFAULT_TAU_MAX, DEFAULT_TAU_MIN, ShiftGrid, average_sweeps, best_shift, frames_to_ms,
    load_scores, paired_scores, sweep_metrics, write_histogram, write_report, write_scores
)
from .simmetrics import DEFAULT_TOP_FRAC, MetricKind
from .stats import Alternative, wilcoxon_signed_rank
from .synth import (
    DEFAULT_JITTER_SIGMA_PX, DEFAULT_LAG_FRAMES, DEFAULT_SMOOTHNESS, SynthParams, generate_pair
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_DATA = 2
EXIT_USAGE = 64
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
LOG_LEVEL_ENV = "EGOGAZE_LOG_LEVEL"
NEGATIVE_RANGE = re.compile(r"^-\d+:")


class _UsageParser(argparse.ArgumentParser):
    """
    Argument parser that reports usage errors with exit status 64.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "{}: error: {}\n".format(self.prog, message))


def _meta_arg(text: str) -> VideoMeta:
    try:
        return parse_meta(text)
    except ParameterError as err:
        raise argparse.ArgumentTypeError(str(err)) from err


def _metric_arg(text: str) -> MetricKind:
    try:
        return MetricKind(text)
    except ValueError as err:
        choices = ", ".join(k.value for k in MetricKind)
        raise argparse.ArgumentTypeError(
            "unknown metric '{}' (choose from {})".format(text, choices)) from err


def _int_arg(minimum: int):
    def convert(text: str) -> int:
        try:
            value = int(text)
        except ValueError as err:
            raise argparse.ArgumentTypeError("invalid integer '{}'".format(text)) from err
        if value < minimum:
            raise argparse.ArgumentTypeError("must be at least {}, got {}".format(minimum, value))
        return value
    return convert


_positive_int = _int_arg(1)
_non_negative_int = _int_arg(0)


def _tau_arg(text: str) -> ShiftGrid:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("expected MIN:MAX[:STEP], got '{}'".format(text))
    try:
        return ShiftGrid(*(int(p) for p in parts))
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from err


def _level_from_env() -> int:
    name = os.environ.get(LOG_LEVEL_ENV, "").strip().upper()
    level = logging.getLevelName(name) if name else logging.WARNING
    return level if isinstance(level, int) else logging.WARNING


def configure_logging(verbosity: int = 0):
    """
    Send log records to standard error. WARNING by default (or the level named by
    `EGOGAZE_LOG_LEVEL`), INFO with `-v`, DEBUG with `-vv`.
    """
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = _level_from_env()
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _resolve_meta(args) -> VideoMeta:
    if getattr(args, "meta_file", None):
        return read_meta_file(args.meta_file)
    return args.meta if args.meta is not None else VideoMeta()


def _kernel(args) -> KernelParams:
    return KernelParams(args.sigma)


def _grid(args) -> ShiftGrid:
    if args.tau is not None:
        return args.tau
    return ShiftGrid(args.tau_min, args.tau_max, args.tau_step)


def _best_line(summary) -> str:
    tau, mean = best_shift(summary)
    return "best_shift={} ({:.2f} ms) metric={} mean={:.6f}".format(
        tau, frames_to_ms(tau, summary.fps), summary.metric.value, mean)


def cmd_map(args) -> int:
    meta = _resolve_meta(args)
    stream = read_gaze_log(args.gaze_csv, meta)
    saliency_map = map_for_frame(stream, args.frame, args.window, _kernel(args))
    if saliency_map is None:
        logger.error("frame %d of %s has no valid gaze", args.frame, args.gaze_csv)
        return EXIT_DATA
    if args.out_pgm:
        write_pgm(saliency_map, args.out_pgm)
    if args.out_csv:
        write_map_csv(saliency_map, args.out_csv)
    return EXIT_OK


def _sweep_all(actor, viewer, args) -> list:
    metrics = list(dict.fromkeys(args.metric or [MetricKind.AUC_MAPS]))
    results = sweep_metrics(
        actor, viewer, metrics, _grid(args), _kernel(args), args.frame_step, args.top_frac,
        args.window, args.workers)
    return list(results.values())


def cmd_sweep(args) -> int:
    meta = _resolve_meta(args)
    actor = read_gaze_log(args.actor_csv, meta)
    viewers = [read_gaze_log(path, meta) for path in args.viewer_csv]
    viewer = viewers[0] if len(viewers) == 1 else merge_streams(viewers)
    results = _sweep_all(actor, viewer, args)
    if args.out:
        write_report(results, args.out)
    if args.scores_out:
        write_scores(results, args.scores_out)
    if args.histogram_out:
        write_histogram(results, args.histogram_out, args.bins)
    for result in results:
        print(_best_line(result))
    return EXIT_OK


def cmd_batch(args) -> int:
    meta = _resolve_meta(args)
    per_pair = []
    for actor_csv, viewer_csv in args.pair:
        actor = read_gaze_log(actor_csv, meta)
        viewer = read_gaze_log(viewer_csv, meta)
        per_pair.append(_sweep_all(actor, viewer, args))
    summaries = [average_sweeps(list(group)) for group in zip(*per_pair)]
    if args.out:
        write_report(summaries, args.out)
    for summary in summaries:
        print(_best_line(summary))
    return EXIT_OK


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_pairs(path: str) -> tuple[list, list]:
    """
    Read two numeric columns from a CSV file; a non-numeric first row is a header.
    """
    xs, ys = [], []
    with open(path, "r", encoding="utf-8", newline="") as file:
        for line_no, row in enumerate(csv.reader(file), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise MalformedRowError(line_no, "expected 2 columns, got {}".format(len(row)))
            if not xs and line_no == 1 and not _is_number(row[0]):
                continue
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError as err:
                raise MalformedRowError(line_no, str(err)) from err
    return xs, ys


def cmd_wilcoxon(args) -> int:
    if args.pairs:
        xs, ys = read_pairs(args.pairs)
    else:
        result = load_scores(args.scores, args.metric, args.fps)
        tau_a = args.tau_a if args.tau_a is not None else best_shift(result)[0]
        xs, ys = paired_scores(result, tau_a, args.tau_b)
        print("tau_a={} tau_b={} metric={}".format(tau_a, args.tau_b, result.metric.value))
    outcome = wilcoxon_signed_rank(xs, ys, args.alternative)
    print("w_plus={:.6f}".format(outcome.w_plus))
    print("n_effective={}".format(outcome.n_effective))
    print("method={}".format(outcome.method.value))
    print("p_value={:.6f}".format(outcome.p_value))
    return EXIT_OK


def cmd_synth(args) -> int:
    meta = _resolve_meta(args)
    params = SynthParams(
        seed=args.seed, n_frames=args.frames, meta=meta, smoothness=args.smoothness,
        lag_frames=args.lag, jitter_sigma_px=args.jitter, dropout_prob=args.dropout)
    pair = generate_pair(params)
    write_gaze_log(pair.actor, args.out_actor)
    write_gaze_log(pair.viewer, args.out_viewer)
    print("lag_frames={} ({:.2f} ms)".format(
        pair.lag_frames, frames_to_ms(pair.lag_frames, params.meta.fps)))
    return EXIT_OK


def cmd_validate(args) -> int:
    stream = read_gaze_log(args.gaze_csv, _resolve_meta(args))
    report = validate_stream(stream)
    print("total={}".format(report.total))
    print("valid={}".format(report.valid))
    print("invalid={}".format(report.invalid))
    print("frames_with_no_valid_sample={}".format(report.frames_with_no_valid_sample))
    return EXIT_OK


def _add_meta(parser, required: bool = True):
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument(
        "--meta", type=_meta_arg, default=None, metavar="SPEC",
        help="video metadata, e.g. width=640,height=480,fps=15[,frames=N]")
    group.add_argument("--meta-file", default=None, metavar="PATH", help="metadata sidecar file")


def _add_kernel(parser):
    parser.add_argument(
        "--sigma", type=float, default=DEFAULT_SIGMA_PX, metavar="PX",
        help="Gaussian kernel std in pixels (default: %(default)s)")
    parser.add_argument(
        "--window", type=_non_negative_int, default=0, metavar="FRAMES",
        help="frame half-window used to collect gaze for a map (default: 0)")


def _add_sweep_options(parser):
    _add_kernel(parser)
    parser.add_argument(
        "--metric", type=_metric_arg, action="append", default=None,
        help="nss, auc-points, auc-maps or pcc; repeatable (default: auc-maps)")
    parser.add_argument(
        "--tau", type=_tau_arg, default=None, metavar="MIN:MAX[:STEP]",
        help="shift grid in frames, e.g. --tau -20:20")
    parser.add_argument("--tau-min", type=int, default=DEFAULT_TAU_MIN)
    parser.add_argument("--tau-max", type=int, default=DEFAULT_TAU_MAX)
    parser.add_argument("--tau-step", type=_positive_int, default=1)
    parser.add_argument("--frame-step", type=_positive_int, default=1, metavar="K")
    parser.add_argument("--top-frac", type=float, default=DEFAULT_TOP_FRAC, metavar="F")
    parser.add_argument(
        "--workers", type=_positive_int, default=1, help="threads used by the sweep")
    parser.add_argument("--out", default=None, metavar="PATH", help="sweep report CSV")


def build_parser() -> argparse.ArgumentParser:
    """
    Build the argument parser of the `egogaze` program.
    """
    parser = _UsageParser(prog="egogaze", description="Actor/viewer gaze comparison toolkit.")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p_map = commands.add_parser("map", help="render the saliency map of one frame")
    p_map.add_argument("gaze_csv")
    _add_meta(p_map)
    _add_kernel(p_map)
    p_map.add_argument("--frame", type=_non_negative_int, required=True)
    p_map.add_argument("--out", "--out-pgm", dest="out_pgm", default=None, metavar="PATH")
    p_map.add_argument("--out-csv", default=None, metavar="PATH")
    p_map.set_defaults(handler=cmd_map)

    p_sweep = commands.add_parser("sweep", help="sweep time shifts between actor and viewers")
    p_sweep.add_argument("actor_csv")
    p_sweep.add_argument("viewer_csv", nargs="+")
    _add_meta(p_sweep)
    _add_sweep_options(p_sweep)
    p_sweep.add_argument("--scores-out", default=None, metavar="PATH")
    p_sweep.add_argument("--histogram-out", default=None, metavar="PATH")
    p_sweep.add_argument("--bins", type=_positive_int, default=20)
    p_sweep.set_defaults(handler=cmd_sweep)

    p_batch = commands.add_parser("batch", help="sweep several pairs and average them")
    p_batch.add_argument(
        "--pair", nargs=2, action="append", required=True, metavar=("ACTOR", "VIEWER"))
    _add_meta(p_batch)
    _add_sweep_options(p_batch)
    p_batch.set_defaults(handler=cmd_batch)

    p_wilcoxon = commands.add_parser("wilcoxon", help="signed-rank test on paired scores")
    source = p_wilcoxon.add_mutually_exclusive_group(required=True)
    source.add_argument("--pairs", default=None, metavar="CSV", help="two paired score columns")
    source.add_argument("--scores", default=None, metavar="CSV", help="per-frame sweep scores")
    p_wilcoxon.add_argument("--metric", type=_metric_arg, default=None)
    p_wilcoxon.add_argument("--fps", type=float, default=15.0)
    p_wilcoxon.add_argument(
        "--tau-a", type=int, default=None, help="first shift (default: best shift)")
    p_wilcoxon.add_argument("--tau-b", type=int, default=0, help="second shift (default: 0)")
    p_wilcoxon.add_argument(
        "--alternative", type=Alternative, default=Alternative.TWO_SIDED,
        choices=list(Alternative), metavar="{two-sided,greater,less}")
    p_wilcoxon.set_defaults(handler=cmd_wilcoxon)

    p_synth = commands.add_parser("synth", help="generate a synthetic pair with a known lag")
    _add_meta(p_synth, required=False)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--frames", type=int, default=300)
    p_synth.add_argument("--smoothness", type=float, default=DEFAULT_SMOOTHNESS)
    p_synth.add_argument("--lag", type=int, default=DEFAULT_LAG_FRAMES)
    p_synth.add_argument("--jitter", type=float, default=DEFAULT_JITTER_SIGMA_PX, metavar="PX")
    p_synth.add_argument("--dropout", type=float, default=0.0)
    p_synth.add_argument("--out-actor", required=True, metavar="PATH")
    p_synth.add_argument("--out-viewer", required=True, metavar="PATH")
    p_synth.set_defaults(handler=cmd_synth)

    p_validate = commands.add_parser("validate", help="count valid and invalid gaze samples")
    p_validate.add_argument("gaze_csv")
    _add_meta(p_validate)
    p_validate.set_defaults(handler=cmd_validate)
    return parser


def _join_negative_ranges(argv: list) -> list:
    # argparse reads "--tau -20:20" as two options
    joined = []
    for token in argv:
        if joined and joined[-1] == "--tau" and NEGATIVE_RANGE.match(token):
            joined[-1] = "--tau=" + token
        else:
            joined.append(token)
    return joined


def main(argv: Optional[list] = None) -> int:
    """
    Run the `egogaze` program.

    Args:
        argv (list[str], optional): Arguments without the program name;
            `sys.argv[1:]` when omitted.

    Returns:
        int: Exit status.
    """
    parser = build_parser()
    try:
        argv = sys.argv[1:] if argv is None else list(argv)
        args = parser.parse_args(_join_negative_ranges(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    configure_logging(args.verbose)
    if args.command == "map" and not (args.out_pgm or args.out_csv):
        logger.error("map needs --out and/or --out-csv")
        return EXIT_USAGE
    try:
        return args.handler(args)
    except ParameterError as err:
        logger.error("%s", err)
        return EXIT_USAGE
    except DataError as err:
        logger.error("%s", err)
        return EXIT_DATA
    except OSError as err:
        logger.error("%s", err)
        return EXIT_IO
