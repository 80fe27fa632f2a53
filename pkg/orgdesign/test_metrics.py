from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from scipy.stats import rankdata

from orgdesign.metrics import (
    EmptyInput,
    FitnessExceedsBest,
    MAX_EXACT_SAMPLES,
    NonPositiveBest,
    SampleLengthMismatch,
    SampleTooLarge,
    WilcoxonResult,
    apre,
    pre,
    success_rate,
    summarize_case,
    wilcoxon_signed_rank,
)

# Reference APRE (%) per case N = 12, 14, ..., 30.
SGA1_APRE = [0.1103, 0.0090, 0.0966, 0.0940, 0.1150, 0.2037, 0.3376, 0.1556, 0.2104, 0.2470]
SGA2_APRE = [0.1122, 0.0460, 0.0869, 0.0372, 0.3076, 0.3085, 0.4914, 0.3494, 0.5307, 0.4825]
HGA_APRE = [0.0370, 0.0, 0.0, 0.0505, 0.0749, 0.0031, 0.0406, 0.0, 0.0067, 0.0]


class TestPre:
    def test_relative_gap_in_percent(self):
        assert pre(99.0, 100.0) == pytest.approx(1.0)
        assert pre(3025.0, 3052.825) == pytest.approx(0.9114, abs=1e-4)
        assert pre(814.11, 821.60) == pytest.approx(0.9117, abs=1e-4)

    def test_best_run_scores_zero(self):
        assert pre(674.29, 674.29) == 0.0

    def test_zero_fitness_scores_hundred(self):
        assert pre(0.0, 500.0) == 100.0

    @pytest.mark.parametrize("best", [0.0, -1.0])
    def test_non_positive_best(self, best):
        with pytest.raises(NonPositiveBest):
            pre(0.0, best)

    def test_fitness_above_best(self):
        with pytest.raises(FitnessExceedsBest):
            pre(101.0, 100.0)


class TestApreAndSuccessRate:
    def test_apre_is_mean(self):
        assert apre([10.0, 20.0]) == 15.0
        assert apre([0.0370] * 10) == pytest.approx(0.0370)

    def test_success_rate(self):
        assert success_rate([100.0] * 8 + [90.0, 95.0], 100.0) == 0.8
        assert success_rate([100.0, 99.9999], 100.0, tol=1e-3) == 1.0
        assert success_rate([90.0], 100.0) == 0.0

    @pytest.mark.parametrize("function, args", [
        (apre, ([],)),
        (success_rate, ([], 1.0)),
    ])
    def test_empty_input(self, function, args):
        with pytest.raises(EmptyInput):
            function(*args)

    def test_summarize_case_uses_relative_tolerance(self):
        best = 1000.0
        runs = [best, best * (1 - 1e-12), 900.0, 950.0]
        apre_value, sr_value = summarize_case(runs, best)
        assert sr_value == 0.5
        assert apre_value == pytest.approx((0.0 + 0.0 + 10.0 + 5.0) / 4)


class TestWilcoxon:
    def test_every_case_favours_hierarchical_search(self):
        result = wilcoxon_signed_rank(SGA1_APRE, HGA_APRE)
        assert result.n_effective == 10
        assert result.statistic == 0.0
        assert result.p_two_sided == pytest.approx(2 / 1024, abs=1e-12)

    def test_one_case_against_hierarchical_search(self):
        result = wilcoxon_signed_rank(SGA2_APRE, HGA_APRE)
        assert result.statistic == 1.0
        assert result.p_two_sided == pytest.approx(4 / 1024, abs=1e-12)

    def test_identical_samples(self):
        result = wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert result == WilcoxonResult(statistic=0.0, n_effective=0, p_two_sided=1.0)

    def test_zero_differences_are_dropped(self):
        result = wilcoxon_signed_rank([1.0, 2.0, 5.0], [1.0, 1.0, 1.0])
        assert result.n_effective == 2

    def test_swapping_samples_keeps_p(self):
        x, y = [3.1, 0.2, 5.0, 1.0, 2.2], [1.0, 0.4, 2.0, 1.5, 2.0]
        assert wilcoxon_signed_rank(x, y).p_two_sided == wilcoxon_signed_rank(y, x).p_two_sided

    def test_length_mismatch(self):
        with pytest.raises(SampleLengthMismatch):
            wilcoxon_signed_rank([1.0, 2.0], [1.0])

    def test_too_many_differences(self):
        n = MAX_EXACT_SAMPLES + 1
        with pytest.raises(SampleTooLarge):
            wilcoxon_signed_rank(np.arange(1, n + 1, dtype=float), np.zeros(n))

    def test_result_dict_round_trip(self):
        result = wilcoxon_signed_rank(SGA1_APRE, HGA_APRE)
        assert WilcoxonResult.from_dict(result.to_dict()) == result


def brute_force_p(x, y):
    differences = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    differences = differences[differences != 0]
    if differences.size == 0:
        return 1.0
    ranks = rankdata(np.abs(differences))
    observed = min(ranks[differences > 0].sum(), ranks[differences < 0].sum())
    hits = 0
    for signs in product([False, True], repeat=differences.size):
        positive = ranks[np.array(signs)].sum()
        hits += positive <= observed + 1e-9
    return min(1.0, 2.0 * hits / 2 ** differences.size)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 6), min_size=n, max_size=n),
        st.lists(st.integers(0, 6), min_size=n, max_size=n),
    )
))
def test_exact_p_matches_sign_enumeration(samples):
    # Small integer values force ties and zero differences.
    x, y = samples
    result = wilcoxon_signed_rank(x, y)
    assert result.p_two_sided == pytest.approx(brute_force_p(x, y), abs=1e-12)
    assert 0.0 < result.p_two_sided <= 1.0
