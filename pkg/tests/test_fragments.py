"""Sampled fragment comparison and its Z-test."""
from __future__ import annotations

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st
from scipy import stats

from hmmfrag import core, exact, fragments
from hmmfrag.core import AlphabetMismatchError
from hmmfrag.models import Hmm, Sequence

OZONE_ROWS = [
    # (mean difference, std of differences, Z) with k = 1000
    (0.03429, 0.04805, 22.567),
    (0.03125, 0.04215, 23.444),
    (0.02705, 0.03621, 23.619),
    (0.02434, 0.03225, 23.868),
    (0.01975, 0.02864, 21.809),
]


@pytest.fixture(scope="module")
def ozone_sequence(ozone4: Hmm) -> Sequence:
    """A series as long as the ozone record, drawn from the 4-state model."""
    return core.simulate(ozone4, 4560, seed=4560)


@pytest.mark.parametrize(("mean", "std", "expected_z"), OZONE_ROWS)
def test_z_statistic_matches_ozone_rows(mean, std, expected_z) -> None:
    result = fragments.z_statistic(mean, std, 1000)
    assert result.z == pytest.approx(expected_z, abs=0.01)
    assert result.p_value < 1e-7


def test_z_statistic_errors_and_tails() -> None:
    assert fragments.z_statistic(0.0, 1.0, 10).p_value == pytest.approx(0.5)
    assert fragments.z_statistic(-1.0, 1.0, 4).p_value == pytest.approx(stats.norm.sf(-2.0))
    assert fragments.z_statistic(1.0, 0.01, 10_000).p_value == 0.0
    with pytest.raises(ValueError):
        fragments.z_statistic(0.1, 0.0, 10)
    with pytest.raises(ValueError):
        fragments.z_statistic(0.1, 1.0, 1)


@given(
    st.floats(-1.0, 1.0, allow_nan=False),
    st.floats(1e-3, 1.0),
    st.integers(2, 5000),
    st.floats(1e-3, 1e3),
)
@hyp_settings(max_examples=100, deadline=None)
def test_z_statistic_is_scale_invariant(mean, std, k, scale) -> None:
    base = fragments.z_statistic(mean, std, k).z
    scaled = fragments.z_statistic(mean * scale, std * scale, k).z
    assert scaled == pytest.approx(base, rel=1e-9, abs=1e-12)


def test_p_value_is_strictly_decreasing_in_z() -> None:
    zs = np.linspace(-8.0, 8.0, 161)
    p_values = [fragments.z_statistic(z / 2.0, 1.0, 4).p_value for z in zs]
    assert all(later < earlier for earlier, later in zip(p_values, p_values[1:]))


def test_p_value_floor_override() -> None:
    # z = 37.5: the tail is about 5e-308, below the default floor.
    assert fragments.z_statistic(1.875, 1.0, 400).p_value == 0.0
    assert fragments.z_statistic(1.875, 1.0, 400, p_value_floor=0.0).p_value > 0.0
    assert fragments.two_sided_p_value(30.0, p_value_floor=1e-100) == 0.0


def test_two_sided_p_value_is_symmetric() -> None:
    assert fragments.two_sided_p_value(1.96) == pytest.approx(0.05, abs=1e-3)
    assert fragments.two_sided_p_value(-1.96) == fragments.two_sided_p_value(1.96)
    assert fragments.two_sided_p_value(0.0) == 1.0


def test_sample_fragments_bounds_and_determinism(ozone_sequence: Sequence) -> None:
    sample = fragments.sample_fragments(ozone_sequence, 5, 300, seed=1)
    assert sample.start_indices.shape == (300,)
    assert sample.start_indices.max() <= len(ozone_sequence) - 5
    again = fragments.sample_fragments(ozone_sequence, 5, 300, seed=1)
    np.testing.assert_array_equal(sample.start_indices, again.start_indices)
    windows = sample.fragments(ozone_sequence)
    start = int(sample.start_indices[0])
    np.testing.assert_array_equal(windows[0], ozone_sequence.symbols[start:start + 5])


def test_sample_fragments_single_offset() -> None:
    y = Sequence.from_symbols([0, 1, 2], 3)
    sample = fragments.sample_fragments(y, 3, 10, seed=0)
    assert sample.start_indices.tolist() == [0] * 10


def test_sample_fragments_are_uniform() -> None:
    y = Sequence(np.zeros(102, dtype=np.int64), 1)
    sample = fragments.sample_fragments(y, 3, 100_000, seed=99)
    counts = np.bincount(sample.start_indices, minlength=100)
    assert counts.size == 100
    assert stats.chisquare(counts).pvalue > 0.001


def test_sample_fragments_errors(ozone_sequence: Sequence) -> None:
    with pytest.raises(fragments.SamplingError):
        fragments.sample_fragments(ozone_sequence, len(ozone_sequence) + 1, 10, seed=0)
    with pytest.raises(fragments.SamplingError):
        fragments.sample_fragments(ozone_sequence, 3, 1, seed=0)
    with pytest.raises(fragments.SamplingError):
        fragments.sample_fragments(ozone_sequence, 0, 10, seed=0)


def test_run_test_identical_models(ozone_sequence: Sequence, ozone3: Hmm) -> None:
    result = fragments.run_test(ozone_sequence, ozone3, ozone3, 3, 200, seed=5)
    assert result.mean_diff == 0.0
    assert result.z == 0.0
    assert result.p_value == 0.5
    assert result.zero_variance


def test_run_test_statistics_are_consistent(ozone_sequence: Sequence, ozone3: Hmm, ozone4: Hmm) -> None:
    result = fragments.run_test(ozone_sequence, ozone3, ozone4, 4, 500, seed=3)
    sample = fragments.sample_fragments(ozone_sequence, 4, 500, seed=3)
    windows = sample.fragments(ozone_sequence)
    l1 = core.fragment_likelihoods(ozone3, windows)
    l2 = core.fragment_likelihoods(ozone4, windows)
    assert result.mu1_hat == pytest.approx(l1.mean(), rel=1e-12)
    assert result.mu2_hat == pytest.approx(l2.mean(), rel=1e-12)
    assert result.mean_diff == pytest.approx(result.mu1_hat - result.mu2_hat, abs=1e-15)
    assert result.sample_std == pytest.approx(np.std(l1 - l2, ddof=1), rel=1e-12)
    assert result.z == pytest.approx(result.mean_diff / (result.sample_std / math.sqrt(500)), abs=1e-9)
    assert result.p_value == pytest.approx(stats.norm.sf(result.z), abs=1e-12)


def test_run_test_degenerate_variance_on_constant_sequence() -> None:
    y = Sequence(np.zeros(50, dtype=np.int64), 2)
    h1 = Hmm(label="a", transition=[[1.0]], emission=[[0.9, 0.1]])
    h2 = Hmm(label="b", transition=[[1.0]], emission=[[0.5, 0.5]])
    with pytest.raises(fragments.DegenerateVarianceError) as info:
        fragments.run_test(y, h1, h2, 2, 20, seed=0)
    assert info.value.identical_fragments


def test_run_test_degenerate_variance_with_distinct_fragments() -> None:
    y = Sequence.from_symbols([0, 1, 0, 1, 1, 0, 1, 0, 0, 1], 3)
    h1 = Hmm(label="halves", transition=[[1.0]], emission=[[0.5, 0.5, 0.0]])
    h2 = Hmm(label="quarters", transition=[[1.0]], emission=[[0.25, 0.25, 0.5]])
    with pytest.raises(fragments.DegenerateVarianceError) as info:
        fragments.run_test(y, h1, h2, 2, 20, seed=0)
    assert not info.value.identical_fragments


def test_run_test_zero_differences_report_exact_zero_std() -> None:
    y = Sequence(np.zeros(50, dtype=np.int64), 2)
    h = Hmm(label="a", transition=[[1.0]], emission=[[0.9, 0.1]])
    result = fragments.run_test(y, h, h, 2, 20, seed=0)
    assert result.zero_variance
    assert result.sample_std == 0.0
    assert (result.z, result.p_value, result.p_value_two_sided) == (0.0, 0.5, 1.0)


def test_run_test_setting_overrides(ozone_sequence: Sequence, ozone3: Hmm, ozone4: Hmm, caplog) -> None:
    caplog.set_level(logging.WARNING, logger="hmmfrag.fragments")
    result = fragments.run_test(ozone_sequence, ozone3, ozone4, 3, 200, seed=1, sparsity_warning_ratio=0.001)
    assert result.sparsity_warning
    assert "K^r/n" in caplog.text
    default = fragments.run_test(ozone_sequence, ozone3, ozone4, 3, 200, seed=1)
    assert not default.sparsity_warning
    assert default.z == result.z


def test_run_test_alphabet_mismatch(two_state: Hmm) -> None:
    y = Sequence.from_symbols([0, 1, 1, 0], 2)
    with pytest.raises(AlphabetMismatchError):
        fragments.run_test(y, two_state, two_state, 2, 5, seed=0)


def test_sparsity_column(caplog) -> None:
    y = Sequence(np.arange(4560) % 3, 3)
    h = Hmm(label="iid", transition=[[1.0]], emission=[[0.5, 0.25, 0.25]])
    other = Hmm(label="iid-other", transition=[[1.0]], emission=[[0.25, 0.5, 0.25]])
    expected = {3: (27, 0.0059), 4: (81, 0.0178), 5: (243, 0.0533), 6: (729, 0.1599), 7: (2187, 0.4796)}
    caplog.set_level(logging.WARNING, logger="hmmfrag.fragments")
    report = fragments.sweep(y, h, other, (3, 7), 200, seed=0)
    for result in report.results:
        space, ratio = expected[result.r]
        assert result.fragment_space == space
        assert round(result.sparsity_ratio, 4) == ratio
        assert result.sparsity_warning == (result.r >= 6)
    assert caplog.text.count("K^r/n") == 2


def test_sweep_seeds_ratios_and_log_likelihood(ozone_sequence: Sequence, ozone3: Hmm, ozone4: Hmm) -> None:
    report = fragments.sweep(ozone_sequence, ozone3, ozone4, (3, 5), 300, seed=10, full_log_likelihood=True)
    assert [r.r for r in report.results] == [3, 4, 5]
    assert [r.seed for r in report.results] == [13, 14, 15]
    single = fragments.run_test(ozone_sequence, ozone3, ozone4, 4, 300, seed=14)
    assert report.results[1] == single
    assert [(row.numerator_r, row.denominator_r) for row in report.ratios] == [(4, 3), (5, 4)]
    assert report.ratios[0].mu1_ratio == pytest.approx(
        report.results[1].mu1_hat / report.results[0].mu1_hat
    )
    assert report.full_log_likelihood_2 == pytest.approx(
        core.log_likelihood_full(ozone4, ozone_sequence)
    )
    assert report.full_log_likelihood_2 > report.full_log_likelihood_1


def test_sweep_requires_r_min_two(ozone_sequence: Sequence, ozone3: Hmm) -> None:
    with pytest.raises(fragments.SamplingError):
        fragments.sweep(ozone_sequence, ozone3, ozone3, (1, 3), 100, seed=0)
    with pytest.raises(fragments.SamplingError):
        fragments.sweep(ozone_sequence, ozone3, ozone3, (4, 3), 100, seed=0)


def test_true_model_is_preferred(ozone_sequence: Sequence, ozone3: Hmm, ozone4: Hmm) -> None:
    for r in (3, 4, 5):
        result = fragments.run_test(ozone_sequence, ozone4, ozone3, r, 1000, seed=r)
        assert result.mu1_hat > result.mu2_hat
        assert result.p_value < 1e-4


@pytest.fixture(scope="module")
def ozone_replicates(ozone4: Hmm) -> list[Sequence]:
    """Independent ozone-length series drawn from the 4-state model."""
    return [core.simulate(ozone4, 4560, seed=replicate) for replicate in range(200)]


@pytest.mark.parametrize("r", [3, 4])
def test_estimators_are_calibrated_against_exact_values(
    ozone_replicates: list[Sequence], ozone3: Hmm, ozone4: Hmm, r: int
) -> None:
    k = 1000
    targets = {
        "mu1": (exact.exact_mu(ozone4, ozone3, r), exact.likelihood_variance(ozone4, ozone3, r)),
        "mu2": (exact.exact_mu(ozone4, ozone4, r), exact.likelihood_variance(ozone4, ozone4, r)),
    }
    covered = {"mu1": 0, "mu2": 0}
    for replicate, y in enumerate(ozone_replicates[:100]):
        result = fragments.run_test(y, ozone3, ozone4, r, k, seed=replicate)
        for name, estimate in (("mu1", result.mu1_hat), ("mu2", result.mu2_hat)):
            mean, variance = targets[name]
            if abs(estimate - mean) <= 4 * math.sqrt(variance / k):
                covered[name] += 1
    assert covered["mu1"] >= 95
    assert covered["mu2"] >= 95


@pytest.mark.parametrize("r", [3, 4])
def test_estimators_are_unbiased(
    ozone_replicates: list[Sequence], ozone3: Hmm, ozone4: Hmm, r: int
) -> None:
    k = 1000
    results = [
        fragments.run_test(y, ozone3, ozone4, r, k, seed=10_000 + replicate)
        for replicate, y in enumerate(ozone_replicates)
    ]
    for hj, estimates in (
        (ozone3, np.array([result.mu1_hat for result in results])),
        (ozone4, np.array([result.mu2_hat for result in results])),
    ):
        sigma = math.sqrt(exact.likelihood_variance(ozone4, hj, r))
        # Windows of one series are correlated, so the replicate spread can exceed sigma / sqrt(k).
        spread = max(sigma / math.sqrt(k), float(estimates.std(ddof=1)))
        assert abs(estimates.mean() - exact.exact_mu(ozone4, hj, r)) <= 4 * spread / math.sqrt(len(results))
