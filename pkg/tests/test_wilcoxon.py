import itertools

import numpy as np
import pytest
from scipy import stats

from umforge import (
    DimensionMismatchError,
    InsufficientDataError,
    wilcoxon_signed_rank,
)


def brute_force_tails(diffs):
    """Enumerate all 2^n sign assignments of the observed |differences|.

    Independent oracle: recomputes W+ from scratch for every assignment.
    """
    diffs = np.asarray(diffs, dtype=np.float64)
    diffs = diffs[diffs != 0]
    ranks = stats.rankdata(np.abs(diffs))
    w_obs = ranks[diffs > 0].sum()
    n = diffs.size
    ge = le = 0
    for signs in itertools.product((1.0, -1.0), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s > 0)
        ge += w >= w_obs
        le += w <= w_obs
    total = 2.0**n
    return w_obs, ge / total, le / total


def brute_force_p(diffs, alternative):
    w, p_ge, p_le = brute_force_tails(diffs)
    if alternative == "greater":
        return w, p_ge
    if alternative == "less":
        return w, p_le
    return w, min(1.0, 2.0 * min(p_ge, p_le))


class TestExactPath:
    def test_five_positive_differences(self):
        a = [1.0, 2.0, 3.0, 4.0, 5.0]
        b = [0.5, 1.0, 2.0, 3.0, 4.0]
        res_greater = wilcoxon_signed_rank(a, b, alternative="greater")
        assert res_greater.statistic == 15.0
        assert res_greater.p_value == pytest.approx(1.0 / 32.0, abs=1e-12)
        res_two = wilcoxon_signed_rank(a, b)
        assert res_two.p_value == pytest.approx(0.0625, abs=1e-12)

    def test_all_zero_differences_error(self):
        a = [1.0] * 8
        with pytest.raises(InsufficientDataError):
            wilcoxon_signed_rank(a, a)

    def test_too_few_nonzero(self):
        a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        b = [1.0, 2.0, 3.0, 4.0, 5.5, 6.5]  # only 2 non-zero diffs
        with pytest.raises(InsufficientDataError):
            wilcoxon_signed_rank(a, b)

    def test_swap_symmetry(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=12)
        b = rng.normal(size=12)
        pab = wilcoxon_signed_rank(a, b).p_value
        pba = wilcoxon_signed_rank(b, a).p_value
        assert pab == pytest.approx(pba, abs=1e-12)

    @pytest.mark.parametrize("n", [5, 6, 7, 8, 10, 12])
    @pytest.mark.parametrize("alternative", ["two-sided", "greater", "less"])
    def test_matches_brute_force_without_ties(self, n, alternative):
        rng = np.random.default_rng(n * 1000 + len(alternative))
        diffs = rng.normal(size=n)
        diffs[diffs == 0] = 0.1
        a = diffs
        b = np.zeros(n)
        expected_w, expected_p = brute_force_p(diffs, alternative)
        res = wilcoxon_signed_rank(a, b, alternative=alternative)
        assert res.statistic == pytest.approx(expected_w)
        assert res.p_value == pytest.approx(expected_p, abs=1e-12)

    @pytest.mark.parametrize("n", [5, 7, 9, 12])
    def test_matches_brute_force_with_ties(self, n):
        # duplicate magnitudes force average ranks
        rng = np.random.default_rng(n)
        mags = rng.integers(1, 4, size=n).astype(float)
        signs = rng.choice([-1.0, 1.0], size=n)
        diffs = mags * signs
        expected_w, expected_p = brute_force_p(diffs, "two-sided")
        res = wilcoxon_signed_rank(diffs, np.zeros(n))
        assert res.statistic == pytest.approx(expected_w)
        assert res.p_value == pytest.approx(expected_p, abs=1e-12)

    def test_matches_scipy_exact_mode(self):
        rng = np.random.default_rng(77)
        a = rng.normal(size=15)
        b = rng.normal(size=15)
        ours = wilcoxon_signed_rank(a, b)
        ref = stats.wilcoxon(a, b, alternative="two-sided", method="exact")
        assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-12)


class TestNormalApproximation:
    def test_large_n_close_to_scipy(self):
        rng = np.random.default_rng(5)
        a = rng.normal(loc=0.3, size=60)
        b = rng.normal(size=60)
        ours = wilcoxon_signed_rank(a, b)
        ref = stats.wilcoxon(a, b, alternative="two-sided", method="approx", correction=True)
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-6)

    def test_tie_correction_applied(self):
        # many tied magnitudes; result stays a valid probability and matches
        # scipy's corrected approximation
        a = np.tile([1.0, 2.0, 3.0], 10) + 0.0
        b = np.zeros(30)
        ours = wilcoxon_signed_rank(a, b)
        ref = stats.wilcoxon(a, b, alternative="two-sided", method="approx", correction=True)
        assert 0 <= ours.p_value <= 1
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-6)


class TestValidation:
    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            wilcoxon_signed_rank([1.0, 2.0], [1.0])

    def test_bad_alternative(self):
        with pytest.raises(Exception):
            wilcoxon_signed_rank([1.0] * 6, [0.0] * 6, alternative="both")
