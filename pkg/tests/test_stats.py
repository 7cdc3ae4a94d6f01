import unittest
from fractions import Fraction

import numpy as np

from .context import base, stats, Alternative, Method


def enumerate_w_plus(n):
    """W+ of every sign assignment of ranks 1..n (bit j of the index marks rank j+1 positive)."""
    assignments = np.arange(2 ** n, dtype=np.int64)
    w_plus = np.zeros(2 ** n, dtype=np.int64)
    for j in range(n):
        w_plus += ((assignments >> j) & 1) * (j + 1)
    return w_plus


class ExactDistributionTestSuite(unittest.TestCase):
    """Exact signed-rank distribution test cases."""

    def test_small_n(self):
        self.assertEqual(stats.exact_signed_rank_cdf(0, 1), 0.5)
        self.assertEqual(stats.exact_signed_rank_cdf(1, 1), 1.0)
        self.assertEqual(stats.exact_signed_rank_cdf(0, 3), 0.125)
        self.assertEqual(stats.exact_signed_rank_cdf(-1, 3), 0.0)

    def test_matches_enumeration(self):
        for n in range(1, 13):
            w_values = enumerate_w_plus(n)
            total = 2 ** n
            for w in range(n * (n + 1) // 2 + 1):
                expected = float(Fraction(int((w_values <= w).sum()), total))
                self.assertEqual(stats.exact_signed_rank_cdf(w, n), expected, msg=(w, n))

    def test_totality_and_monotonicity(self):
        for n in (1, 5, 12, 20):
            max_w = n * (n + 1) // 2
            self.assertEqual(stats.exact_signed_rank_cdf(max_w, n), 1.0)
            cdf = [stats.exact_signed_rank_cdf(w, n) for w in range(max_w + 1)]
            assert all(a <= b for a, b in zip(cdf, cdf[1:]))

    def test_half_integer_w(self):
        self.assertEqual(stats.exact_signed_rank_cdf(2.5, 4), stats.exact_signed_rank_cdf(2, 4))

    def test_n_out_of_range(self):
        for n in (0, 21):
            with self.assertRaises(base.NOutOfRangeError):
                stats.exact_signed_rank_cdf(1, n)


class SignedRankTestSuite(unittest.TestCase):
    """Wilcoxon signed-rank test cases."""

    def test_all_positive(self):
        result = stats.wilcoxon_signed_rank([6, 7, 8, 9, 10], [5, 5, 5, 5, 5], "greater")
        self.assertEqual(result.w_plus, 15.0)
        self.assertEqual(result.n_effective, 5)
        self.assertEqual(result.method, Method.EXACT)
        self.assertEqual(result.alternative, Alternative.GREATER)
        self.assertEqual(round(result.p_value, 6), 0.03125)

    def test_two_sided_and_less(self):
        d = [1, 2, 3, 4, 5]
        two_sided = stats.wilcoxon_signed_rank(d, [0] * 5)
        self.assertEqual(two_sided.p_value, 0.0625)
        less = stats.wilcoxon_signed_rank(d, [0] * 5, Alternative.LESS)
        self.assertEqual(less.p_value, 1.0)

    def test_zero_differences_dropped(self):
        result = stats.wilcoxon_signed_rank([1, 2, 3, 4, 5, 6, 7], [1, 0, 0, 0, 0, 0, 7])
        self.assertEqual(result.n_effective, 5)
        self.assertEqual(result.w_plus, 15.0)

    def test_errors(self):
        with self.assertRaises(base.AllZeroDifferencesError):
            stats.wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        with self.assertRaises(base.LengthMismatchError):
            stats.wilcoxon_signed_rank([1.0, 2.0], [1.0])
        with self.assertRaises(base.LengthMismatchError):
            stats.wilcoxon_signed_rank([], [])
        with self.assertRaises(base.TooFewPairsError):
            stats.wilcoxon_signed_rank([1, 1, 2, 5], [0, 0, 0, 0])
        with self.assertRaises(ValueError):
            stats.wilcoxon_signed_rank([1, 2], [0, 0], "sideways")

    def test_random_n12_against_enumeration(self):
        rng = np.random.default_rng(12)
        d = rng.normal(0.3, 1.0, size=12)
        result = stats.wilcoxon_signed_rank(d, np.zeros(12))
        self.assertEqual(result.method, Method.EXACT)
        w_values = enumerate_w_plus(12)
        lower = (w_values <= result.w_plus).mean()
        upper = (w_values >= result.w_plus).mean()
        expected = min(1.0, 2 * min(lower, upper))
        self.assertAlmostEqual(result.p_value, expected, delta=1e-12)
        approx = stats.signed_rank_normal_p(result.w_plus, 12, Alternative.TWO_SIDED)
        self.assertAlmostEqual(approx, expected, delta=0.02)

    def test_swap_symmetry(self):
        rng = np.random.default_rng(7)
        x, y = rng.normal(size=15), rng.normal(size=15)
        forward = stats.wilcoxon_signed_rank(x, y)
        backward = stats.wilcoxon_signed_rank(y, x)
        self.assertEqual(forward.w_plus + backward.w_plus, 15 * 16 / 2)
        self.assertAlmostEqual(forward.p_value, backward.p_value, delta=1e-12)

    def test_normal_approximation_n20(self):
        w_values = enumerate_w_plus(20)
        counts = np.bincount(w_values)
        total = 2.0 ** 20
        lower = np.cumsum(counts) / total
        upper = np.cumsum(counts[::-1])[::-1] / total
        worst = 0.0
        for w in range(counts.size):
            for alternative, exact in (("less", lower[w]), ("greater", upper[w])):
                approx = stats.signed_rank_normal_p(w, 20, alternative)
                worst = max(worst, abs(approx - exact))
        assert worst <= 0.01

    def test_ties_use_normal_approximation(self):
        x = [2, 2, 3, 3, 4, 5, 6, -1]
        result = stats.wilcoxon_signed_rank(x, [0] * 8, "greater")
        self.assertEqual(result.method, Method.NORMAL_APPROX)
        self.assertEqual(result.w_plus, 35.0)
        tie_term = 2 * (2 ** 3 - 2)
        expected = stats.signed_rank_normal_p(35.0, 8, Alternative.GREATER, tie_term)
        self.assertEqual(result.p_value, expected)
        assert 0.0 <= result.p_value <= 1.0

    def test_large_n_normal(self):
        rng = np.random.default_rng(3)
        d = rng.normal(0.5, 1.0, size=60)
        result = stats.wilcoxon_signed_rank(d, np.zeros(60), "greater")
        self.assertEqual(result.method, Method.NORMAL_APPROX)
        assert result.p_value < 0.01
        assert 0 <= result.w_plus <= 60 * 61 / 2


if __name__ == "__main__":
    unittest.main()
