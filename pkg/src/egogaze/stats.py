"""
Wilcoxon signed-rank test for paired scores, with the exact null distribution for
small tie-free samples and a tie-corrected normal approximation otherwise.
"""

import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from scipy.stats import norm, rankdata

from .base import (
    AllZeroDifferencesError, LengthMismatchError, NOutOfRangeError, TooFewPairsError
)

logger = logging.getLogger(__name__)

EXACT_MAX_N = 20
NORMAL_MIN_N = 5
CONTINUITY = 0.5


class Alternative(Enum):
    """
    Alternative hypotheses about the differences `x - y`.
    """
    TWO_SIDED = "two-sided"
    """The differences are not symmetric around zero."""
    GREATER = "greater"
    """The differences tend to be positive."""
    LESS = "less"
    """The differences tend to be negative."""


class Method(Enum):
    """
    How the p-value was obtained.
    """
    EXACT = "exact"
    NORMAL_APPROX = "normal-approx"


@dataclass(frozen=True)
class WilcoxonResult:
    """
    Outcome of a signed-rank test.

    Attributes:
        w_plus (float): Sum of the ranks of positive differences.
        n_effective (int): Number of nonzero differences.
        p_value (float): P-value in [0, 1].
        alternative (Alternative): Tested alternative.
        method (Method): Exact enumeration or normal approximation.
    """
    w_plus: float
    n_effective: int
    p_value: float
    alternative: Alternative
    method: Method


@functools.lru_cache(maxsize=None)
def _signed_rank_counts(n: int) -> np.ndarray:
    """
    Number of sign assignments of ranks 1..n giving each value of W+,
    built by adding one rank at a time.
    """
    max_w = n * (n + 1) // 2
    counts = np.zeros(max_w + 1, dtype=np.int64)
    counts[0] = 1
    for rank in range(1, n + 1):
        counts[rank:] = counts[rank:] + counts[:-rank]
    counts.setflags(write=False)
    return counts


def _check_n(n: int):
    if not 1 <= n <= EXACT_MAX_N:
        raise NOutOfRangeError(
            "exact distribution supports 1 <= n <= {}, got {}".format(EXACT_MAX_N, n))


def exact_signed_rank_cdf(w: float, n: int) -> float:
    """
    P(W+ <= w) under the null hypothesis for `n` tie-free nonzero differences.

    Args:
        w (float): Statistic value.
        n (int): Number of differences, 1 <= n <= 20.

    Returns:
        float: Cumulative probability; exact up to the final division by 2^n.

    Raises:
        NOutOfRangeError: `n` outside [1, 20].

    Examples:
        ```
        exact_signed_rank_cdf(0, 3)  # 0.125
        ```
    """
    _check_n(n)
    counts = _signed_rank_counts(n)
    upper = math.floor(w)
    if upper < 0:
        return 0.0
    if upper >= counts.size - 1:
        return 1.0
    return int(counts[:upper + 1].sum()) / (1 << n)


def _exact_p_value(w_plus: float, n: int, alternative: Alternative) -> float:
    counts = _signed_rank_counts(n)
    total = 1 << n
    lower = int(counts[:math.floor(w_plus) + 1].sum())
    upper = int(counts[math.ceil(w_plus):].sum())
    if alternative is Alternative.LESS:
        return lower / total
    if alternative is Alternative.GREATER:
        return upper / total
    return min(1.0, 2 * min(lower, upper) / total)


def signed_rank_normal_p(
        w_plus: float, n: int, alternative: Union[Alternative, str] = Alternative.TWO_SIDED,
        tie_term: float = 0.0
    ) -> float:
    """
    Normal approximation of the signed-rank p-value with continuity correction 0.5.

    Args:
        w_plus (float): Sum of ranks of positive differences.
        n (int): Number of nonzero differences.
        alternative (Alternative, optional): Alternative hypothesis.
        tie_term (float, optional): Sum of `t^3 - t` over groups of tied absolute differences.

    Returns:
        float: Approximate p-value clipped to [0, 1].
    """
    alternative = Alternative(alternative)
    mean = n * (n + 1) / 4.0
    var = (n * (n + 1) * (2 * n + 1) - tie_term / 2.0) / 24.0
    sd = math.sqrt(var)
    if alternative is Alternative.GREATER:
        p_value = norm.sf((w_plus - mean - CONTINUITY) / sd)
    elif alternative is Alternative.LESS:
        p_value = norm.cdf((w_plus - mean + CONTINUITY) / sd)
    else:
        p_value = 2.0 * norm.sf((abs(w_plus - mean) - CONTINUITY) / sd)
    return float(min(max(p_value, 0.0), 1.0))


def wilcoxon_signed_rank(
        x, y, alternative: Union[Alternative, str] = Alternative.TWO_SIDED
    ) -> WilcoxonResult:
    """
    Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped. Absolute differences are ranked with midranks.
    The exact distribution is used for up to 20 tie-free differences, otherwise the
    tie-corrected normal approximation.

    Args:
        x (list[float]): First sample.
        y (list[float]): Second sample, paired with `x`.
        alternative (Alternative or str, optional): "two-sided", "greater" (x tends
            to exceed y) or "less".

    Returns:
        WilcoxonResult: Statistic, effective sample size, p-value and method.

    Raises:
        LengthMismatchError: `x` and `y` differ in length or are empty.
        AllZeroDifferencesError: All pairs are equal.
        TooFewPairsError: Fewer than 5 nonzero differences and the exact method
            is not applicable.

    Examples:
        ```
        result = wilcoxon_signed_rank([6, 7, 8, 9, 10], [5, 5, 5, 5, 5], "greater")
        print(result.p_value)  # 0.03125
        ```
    """
    alternative = Alternative(alternative)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise LengthMismatchError(
            "paired samples must be non-empty and of equal length, got {} and {}".format(
                x.size, y.size))
    diff = x - y
    diff = diff[diff != 0]
    n = diff.size
    if n == 0:
        raise AllZeroDifferencesError("all paired differences are zero")
    abs_diff = np.abs(diff)
    ranks = rankdata(abs_diff, method="average")
    w_plus = float(ranks[diff > 0].sum())
    _, tie_counts = np.unique(abs_diff, return_counts=True)
    has_ties = bool((tie_counts > 1).any())

    if n <= EXACT_MAX_N and not has_ties:
        p_value = _exact_p_value(w_plus, n, alternative)
        method = Method.EXACT
    else:
        if n < NORMAL_MIN_N:
            raise TooFewPairsError(
                "{} nonzero differences with ties are too few for the normal approximation"
                .format(n))
        tie_term = float((tie_counts.astype(np.float64) ** 3 - tie_counts).sum())
        p_value = signed_rank_normal_p(w_plus, n, alternative, tie_term)
        method = Method.NORMAL_APPROX
    logger.debug("signed-rank test: w+=%s n=%d p=%s (%s)", w_plus, n, p_value, method.value)
    return WilcoxonResult(w_plus, n, p_value, alternative, method)
