"""
Recover a known actor/viewer lag from synthetic gaze streams.
"""

import argparse
import logging

from egogaze import KernelParams, MetricKind, SynthParams, VideoMeta
from egogaze import average_sweeps, best_shift, frames_to_ms, generate_pair, paired_scores
from egogaze import sweep_metrics, wilcoxon_signed_rank, write_report

META = VideoMeta(160, 120, 15)
PARAMS = KernelParams(10.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lag", type=int, default=10)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--frames", type=int, default=300)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--report", default=None)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    per_seed = []
    for seed in range(args.seeds):
        pair = generate_pair(SynthParams(seed, args.frames, META, lag_frames=args.lag))
        per_seed.append(sweep_metrics(
            pair.actor, pair.viewer, list(MetricKind), params=PARAMS, workers=args.workers))

    summaries = []
    for metric in MetricKind:
        results = []
        for seed, by_metric in enumerate(per_seed):
            result = by_metric[metric]
            results.append(result)
            tau, mean = best_shift(result)
            at_best, at_zero = paired_scores(result, tau, 0) if tau != 0 else ([], [])
            if at_best:
                test = wilcoxon_signed_rank(at_best, at_zero, "greater")
                print("{:<10} seed={} best_shift={:>3} ({:7.2f} ms) mean={:.4f} p={:.2e}".format(
                    metric.value, seed, tau, frames_to_ms(tau, META.fps), mean, test.p_value))
            else:
                print("{:<10} seed={} best_shift=  0".format(metric.value, seed))
        summary = average_sweeps(results)
        tau, mean = best_shift(summary)
        print("{:<10} averaged best_shift={} ({:.2f} ms) mean={:.4f}".format(
            metric.value, tau, frames_to_ms(tau, META.fps), mean))
        summaries.append(summary)
    if args.report:
        write_report(summaries, args.report)


if __name__ == "__main__":
    main()
