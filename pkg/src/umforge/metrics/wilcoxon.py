"""Wilcoxon signed-rank test for paired samples.

Zero differences are dropped and tied absolute differences receive average
ranks. For n <= 20 the p-value is exact, from the distribution of the
positive-rank sum over all 2^n sign assignments (computed by convolution);
beyond that a normal approximation with tie and continuity corrections is
used. The reported statistic is W+, the sum of ranks of positive differences.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import stats

from ..errors import DimensionMismatchError, InsufficientDataError, ParameterError

EXACT_LIMIT = 20
_MIN_PAIRS = 5

_ALTERNATIVES = ("two-sided", "greater", "less")


class WilcoxonResult(NamedTuple):
    statistic: float
    p_value: float


def _exact_tail_probs(ranks2: np.ndarray, w2: int) -> tuple[float, float]:
    """P(W2 >= w2) and P(W2 <= w2) where W2 sums a random subset of ranks2.

    ranks2 holds the doubled ranks (integers even with .5 average ranks);
    counts[s] is the number of sign assignments with doubled rank sum s.
    """
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in ranks2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    denom = counts.sum()
    p_ge = counts[w2:].sum() / denom
    p_le = counts[: w2 + 1].sum() / denom
    return float(p_ge), float(p_le)


def _normal_tail_probs(w: float, ranks: np.ndarray) -> tuple[float, float]:
    n = ranks.size
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts).sum())) / 48.0
    sigma = np.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_term)
    p_ge = stats.norm.sf((w - mu - 0.5) / sigma)
    p_le = stats.norm.cdf((w - mu + 0.5) / sigma)
    return float(p_ge), float(p_le)


def wilcoxon_signed_rank(a, b, alternative: str = "two-sided") -> WilcoxonResult:
    """Signed-rank test on paired samples a, b (differences a - b).

    Requires at least 5 non-zero differences. The two-sided p-value is
    min(1, 2 * min(lower tail, upper tail)).
    """
    if alternative not in _ALTERNATIVES:
        raise ParameterError(f"alternative must be one of {_ALTERNATIVES}")
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.size != y.size:
        raise DimensionMismatchError("paired samples must have equal length")
    diffs = x - y
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n < _MIN_PAIRS:
        raise InsufficientDataError(
            f"only {n} non-zero paired differences; need at least {_MIN_PAIRS}"
        )
    ranks = stats.rankdata(np.abs(diffs))
    w_plus = float(ranks[diffs > 0].sum())

    if n <= EXACT_LIMIT:
        ranks2 = np.rint(2.0 * ranks).astype(np.int64)
        w2 = int(np.rint(2.0 * w_plus))
        p_ge, p_le = _exact_tail_probs(ranks2, w2)
    else:
        p_ge, p_le = _normal_tail_probs(w_plus, ranks)

    if alternative == "greater":
        p = p_ge
    elif alternative == "less":
        p = p_le
    else:
        p = min(1.0, 2.0 * min(p_ge, p_le))
    return WilcoxonResult(w_plus, float(min(max(p, 0.0), 1.0)))
