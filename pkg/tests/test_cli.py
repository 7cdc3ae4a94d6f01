import contextlib
import io
import logging
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from .context import cli, fixmap, gaze_io, KernelParams

META = "width=160,height=120,fps=15"


def run(*argv):
    """Run the program and capture its exit status, standard output and standard error."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        status = cli.main(list(argv))
    return status, out.getvalue(), err.getvalue()


class CLITestCase(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        logging.getLogger().handlers.clear()
        self._tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp, name)

    def write(self, name, text):
        with open(self.path(name), "w") as file:
            file.write(text)
        return self.path(name)

    def synth(self, prefix, *extra):
        actor, viewer = self.path(prefix + "-actor.csv"), self.path(prefix + "-viewer.csv")
        status, out, _ = run(
            "synth", "--meta", META, "--out-actor", actor, "--out-viewer", viewer, *extra)
        self.assertEqual(status, 0)
        return actor, viewer, out


class SynthCommandTestSuite(CLITestCase):
    """synth command test cases."""

    def test_reproducible(self):
        a1, v1, out = self.synth("one", "--seed", "7", "--frames", "50")
        a2, v2, _ = self.synth("two", "--seed", "7", "--frames", "50")
        self.assertEqual(out, "lag_frames=10 (666.67 ms)\n")
        for first, second in ((a1, a2), (v1, v2)):
            with open(first, "rb") as f1, open(second, "rb") as f2:
                self.assertEqual(f1.read(), f2.read())

    def test_zero_lag_zero_jitter(self):
        actor, viewer, out = self.synth("same", "--frames", "40", "--lag", "0", "--jitter", "0")
        self.assertEqual(out, "lag_frames=0 (0.00 ms)\n")
        with open(actor) as f1, open(viewer) as f2:
            self.assertEqual(f1.read(), f2.read())

    def test_dropout(self):
        actor, _, _ = self.synth("drop", "--frames", "1000", "--lag", "0", "--dropout", "0.5")
        status, out, _ = run("validate", actor, "--meta", META)
        self.assertEqual(status, 0)
        counts = dict(line.split("=") for line in out.splitlines())
        self.assertEqual(int(counts["total"]), 2000)
        self.assertAlmostEqual(int(counts["invalid"]) / 2000, 0.5, delta=0.05)

    def test_invalid_params(self):
        status, _, err = run(
            "synth", "--smoothness", "1.5", "--out-actor", self.path("a.csv"),
            "--out-viewer", self.path("v.csv"))
        self.assertEqual(status, 64)
        assert "smoothness" in err
        assert not os.path.exists(self.path("a.csv"))

    def test_lag_too_large(self):
        status, _, _ = run(
            "synth", "--frames", "10", "--lag", "10", "--out-actor", self.path("a.csv"),
            "--out-viewer", self.path("v.csv"))
        self.assertEqual(status, 64)
        assert not os.path.exists(self.path("a.csv"))


class SweepCommandTestSuite(CLITestCase):
    """sweep and wilcoxon command test cases."""

    def test_lag_recovery_and_wilcoxon(self):
        actor, viewer, _ = self.synth("lag", "--seed", "42", "--frames", "300")
        report, scores = self.path("report.csv"), self.path("scores.csv")
        status, out, _ = run(
            "sweep", actor, viewer, "--meta", META + ",frames=300", "--sigma", "10",
            "--out", report, "--scores-out", scores, "--histogram-out", self.path("hist.csv"))
        self.assertEqual(status, 0)
        assert out.startswith("best_shift=10 (666.67 ms) metric=auc-maps mean="), out
        with open(report) as file:
            lines = file.read().splitlines()
        self.assertEqual(lines[0], "tau_frames,tau_ms,metric,mean,std,n")
        self.assertEqual(len(lines), 42)
        assert lines[31].startswith("10,666.666667,auc-maps,")

        status, out, _ = run("wilcoxon", "--scores", scores, "--alternative", "greater")
        self.assertEqual(status, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "tau_a=10 tau_b=0 metric=auc-maps")
        values = dict(line.split("=") for line in lines[1:])
        assert float(values["p_value"]) < 0.01
        self.assertEqual(values["method"], "normal-approx")

    def test_self_comparison_several_metrics(self):
        actor, _, _ = self.synth("self", "--frames", "40")
        status, out, _ = run(
            "sweep", actor, actor, "--meta", META, "--sigma", "10", "--tau=-3:3",
            "--metric", "pcc", "--metric", "nss", "--workers", "2")
        self.assertEqual(status, 0)
        lines = out.splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(lines[0], "best_shift=0 (0.00 ms) metric=pcc mean=1.000000")
        assert lines[1].startswith("best_shift=0 (0.00 ms) metric=nss mean=")

    def test_usage_errors(self):
        actor, _, _ = self.synth("usage", "--frames", "20")
        for extra in (["--tau-min", "5", "--tau-max", "2"], ["--tau=5:2"], ["--metric", "kl"],
                      ["--top-frac", "1.5"]):
            status, _, _ = run("sweep", actor, actor, "--meta", META, *extra)
            self.assertEqual(status, 64, msg=extra)
        status, _, _ = run("sweep", actor, actor)
        self.assertEqual(status, 64)
        status, _, _ = run("sweep", actor, actor, "--meta", "width=160")
        self.assertEqual(status, 64)

    def test_numeric_flags_checked_before_running(self):
        actor, _, _ = self.synth("flags", "--frames", "20")
        histogram = self.write("hist.csv", "keep\n")
        status, _, err = run(
            "sweep", actor, actor, "--meta", META, "--histogram-out", histogram, "--bins", "0")
        self.assertEqual(status, 64)
        assert "Traceback" not in err
        with open(histogram) as file:
            self.assertEqual(file.read(), "keep\n")
        for extra in (["--window", "-2"], ["--frame-step", "0"], ["--workers", "0"],
                      ["--tau-step", "0"], ["--bins", "x"]):
            status, _, _ = run("sweep", actor, actor, "--meta", META, *extra)
            self.assertEqual(status, 64, msg=extra)

    def test_negative_tau_range_as_separate_value(self):
        actor, _, _ = self.synth("tau", "--frames", "30")
        report = self.path("tau.csv")
        status, out, _ = run(
            "sweep", actor, actor, "--meta", META, "--sigma", "10", "--tau", "-3:3",
            "--metric", "pcc", "--out", report)
        self.assertEqual(status, 0)
        self.assertEqual(out, "best_shift=0 (0.00 ms) metric=pcc mean=1.000000\n")
        with open(report) as file:
            rows = file.read().splitlines()
        self.assertEqual(len(rows), 8)
        assert rows[1].startswith("-3,-200.000000,pcc,")

    def test_data_and_io_errors(self):
        actor, _, _ = self.synth("errors", "--frames", "20")
        status, _, err = run("sweep", actor, self.path("missing.csv"), "--meta", META)
        self.assertEqual(status, 1)
        assert "ERROR" in err
        broken = self.write("broken.csv", "frame,t_s,x_px,y_px,valid\n0,0.0,1,1\n")
        status, _, err = run("sweep", actor, broken, "--meta", META)
        self.assertEqual(status, 2)
        assert "line 2" in err
        far = self.write("far.csv", "90,6.0,50,50,1\n")
        near = self.write("near.csv", "0,0.0,50,50,1\n")
        status, _, _ = run("sweep", near, far, "--meta", META, "--tau=-5:5")
        self.assertEqual(status, 2)

    def test_batch(self):
        pairs = []
        for seed in ("1", "2"):
            actor, viewer, _ = self.synth(
                "batch" + seed, "--seed", seed, "--frames", "80", "--lag", "4", "--jitter", "0")
            pairs += ["--pair", actor, viewer]
        report = self.path("batch.csv")
        status, out, _ = run(
            "batch", *pairs, "--meta", META, "--sigma", "10", "--tau=-8:8", "--metric", "pcc",
            "--out", report)
        self.assertEqual(status, 0)
        assert out.startswith("best_shift=4 (266.67 ms) metric=pcc mean=1.000000"), out
        with open(report) as file:
            rows = file.read().splitlines()
        self.assertEqual(rows[13], "4,266.666667,pcc,1.000000,0.000000,2")


class WilcoxonCommandTestSuite(CLITestCase):
    """wilcoxon command test cases on paired columns."""

    def test_all_positive(self):
        pairs = self.write("pairs.csv", "best,zero\n6,5\n7,5\n8,5\n9,5\n10,5\n")
        status, out, _ = run("wilcoxon", "--pairs", pairs, "--alternative", "greater")
        self.assertEqual(status, 0)
        self.assertEqual(out.splitlines(), [
            "w_plus=15.000000", "n_effective=5", "method=exact", "p_value=0.031250"])

    def test_identical_columns(self):
        pairs = self.write("same.csv", "1,1\n2,2\n3,3\n")
        status, _, err = run("wilcoxon", "--pairs", pairs)
        self.assertEqual(status, 2)
        assert "zero" in err

    def test_bad_inputs(self):
        pairs = self.write("bad.csv", "1,1\n2\n")
        self.assertEqual(run("wilcoxon", "--pairs", pairs)[0], 2)
        self.assertEqual(run("wilcoxon", "--pairs", pairs, "--alternative", "up")[0], 64)
        self.assertEqual(run("wilcoxon")[0], 64)


class MapCommandTestSuite(CLITestCase):
    """map command test cases."""

    def setUp(self):
        super().setUp()
        self.gaze = self.write(
            "gaze.csv", "frame,t_s,x_px,y_px,valid\n0,0.0,40.5,30.25,1\n0,0.03,44,33,1\n"
                        "1,0.07,10,10,0\n2,0.13,100,90,1\n")

    def test_map_outputs(self):
        pgm, csv_path = self.path("f0.pgm"), self.path("f0.csv")
        status, _, _ = run(
            "map", self.gaze, "--meta", META, "--frame", "0", "--sigma", "10",
            "--out", pgm, "--out-csv", csv_path)
        self.assertEqual(status, 0)
        self.assertEqual(fixmap.read_pgm(pgm).max(), 65535)
        stream = gaze_io.read_gaze_log(self.gaze, gaze_io.parse_meta(META))
        expected = fixmap.map_for_frame(stream, 0, 0, KernelParams(10.0))
        np.testing.assert_array_equal(fixmap.read_map_csv(csv_path).values, expected.values)

    def test_window(self):
        status, _, _ = run(
            "map", self.gaze, "--meta", META, "--frame", "1", "--window", "1",
            "--out-csv", self.path("w.csv"))
        self.assertEqual(status, 0)

    def test_no_gaze(self):
        pgm = self.path("f1.pgm")
        status, _, err = run("map", self.gaze, "--meta", META, "--frame", "1", "--out", pgm)
        self.assertEqual(status, 2)
        assert not os.path.exists(pgm)
        assert "no valid gaze" in err

    def test_negative_frame_or_window(self):
        for extra in (["--frame", "-1"], ["--frame", "0", "--window", "-1"]):
            status, _, _ = run("map", self.gaze, "--meta", META, "--out", self.path("n.pgm"), *extra)
            self.assertEqual(status, 64, msg=extra)
        assert not os.path.exists(self.path("n.pgm"))

    def test_missing_output(self):
        self.assertEqual(run("map", self.gaze, "--meta", META, "--frame", "0")[0], 64)

    def test_meta_file(self):
        meta_file = self.write("clip.meta", "width=160\nheight=120\nfps=15\n")
        status, _, _ = run(
            "map", self.gaze, "--meta-file", meta_file, "--frame", "2", "--out", self.path("m.pgm"))
        self.assertEqual(status, 0)


class LoggingTestSuite(CLITestCase):
    """Logging configuration test cases."""

    def test_levels(self):
        cli.configure_logging(0)
        self.assertEqual(logging.getLogger().level, logging.WARNING)
        cli.configure_logging(1)
        self.assertEqual(logging.getLogger().level, logging.INFO)
        cli.configure_logging(2)
        self.assertEqual(logging.getLogger().level, logging.DEBUG)

    def test_env_override(self):
        with mock.patch.dict(os.environ, {"EGOGAZE_LOG_LEVEL": "debug"}):
            cli.configure_logging(0)
        self.assertEqual(logging.getLogger().level, logging.DEBUG)
        with mock.patch.dict(os.environ, {"EGOGAZE_LOG_LEVEL": "loud"}):
            cli.configure_logging(0)
        self.assertEqual(logging.getLogger().level, logging.WARNING)

    def test_verbose_flag(self):
        gaze = self.write("v.csv", "0,0.0,5,5,1\n")
        status, _, err = run("-v", "validate", gaze, "--meta", META)
        self.assertEqual(status, 0)
        assert "INFO egogaze.gaze_io: parsed 1 gaze samples" in err

    def test_help(self):
        status, out, _ = run("--help")
        self.assertEqual(status, 0)
        assert "sweep" in out

    def test_missing_command(self):
        self.assertEqual(run()[0], 64)


if __name__ == "__main__":
    unittest.main()
