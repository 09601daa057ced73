"""Sampled fragment comparison of two candidate models.

Start positions are drawn iid uniform with replacement from one observed
sequence, so sampled fragments may overlap. The Z-test treats them as
approximately independent.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import ndtr

from hmmfrag.config import settings
from hmmfrag.core import check_alphabet, fragment_likelihoods, log_likelihood_full
from hmmfrag.models import Hmm, Sequence
from hmmfrag.schemas import RatioRow, SweepReport, TestResult

logger = logging.getLogger(__name__)


class SamplingError(ValueError):
    """Raised for fragment lengths or sample sizes the sequence cannot support."""


class DegenerateVarianceError(ValueError):
    """Raised when paired differences have zero spread but a non-zero mean."""

    def __init__(self, message: str, *, identical_fragments: bool):
        super().__init__(message)
        self.identical_fragments = identical_fragments


class ZTest(NamedTuple):
    z: float
    p_value: float


@dataclass(frozen=True)
class FragmentSample:
    r: int
    k: int
    start_indices: np.ndarray
    seed: int

    def fragments(self, y: Sequence) -> np.ndarray:
        """The sampled windows of ``y`` as a ``(k, r)`` array."""
        return sliding_window_view(y.symbols, self.r)[self.start_indices]


def sample_fragments(y: Sequence, r: int, k: int, seed: int) -> FragmentSample:
    """Draw ``k`` start offsets uniformly from ``[0, n - r]`` with replacement."""
    n = len(y)
    if r < 1:
        raise SamplingError(f"fragment length must be at least 1, got {r}")
    if r > n:
        raise SamplingError(f"fragment length {r} exceeds sequence length {n}")
    if k < 2:
        raise SamplingError(f"need at least 2 fragments to estimate a variance, got {k}")
    rng = np.random.default_rng(seed)
    starts = rng.integers(0, n - r + 1, size=k)
    starts.setflags(write=False)
    return FragmentSample(r=r, k=k, start_indices=starts, seed=seed)


def _upper_tail(z: float, floor: float | None = None) -> float:
    floor = settings.p_value_floor if floor is None else floor
    p = float(ndtr(-z))
    return 0.0 if p < floor else p


def z_statistic(
    mean_diff: float,
    sample_std: float,
    k: int,
    *,
    p_value_floor: float | None = None,
) -> ZTest:
    """``Z = mean / (std / sqrt(k))`` and its one-sided upper-tail p-value.

    The tail uses ``scipy.special.ndtr`` (erfc-based). P-values under the
    floor (``settings.p_value_floor`` by default) are reported as exactly 0.
    """
    if sample_std <= 0:
        raise ValueError(f"sample standard deviation must be positive, got {sample_std!r}")
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    z = mean_diff / (sample_std / math.sqrt(k))
    return ZTest(z=z, p_value=_upper_tail(z, p_value_floor))


def two_sided_p_value(z: float, *, p_value_floor: float | None = None) -> float:
    return min(1.0, 2.0 * _upper_tail(abs(z), p_value_floor))


def run_test(
    y: Sequence,
    h1: Hmm,
    h2: Hmm,
    r: int,
    k: int,
    seed: int,
    *,
    sparsity_warning_ratio: float | None = None,
    p_value_floor: float | None = None,
) -> TestResult:
    """One-sided test of ``mu_1(r) = mu_2(r)`` against ``mu_1(r) > mu_2(r)``.

    Constant paired differences have no usable variance: all zeros give
    ``z = 0, p = 0.5``; any other constant raises :class:`DegenerateVarianceError`.
    """
    if sparsity_warning_ratio is None:
        sparsity_warning_ratio = settings.sparsity_warning_ratio
    check_alphabet(h1, y.alphabet_size)
    check_alphabet(h2, y.alphabet_size)
    sample = sample_fragments(y, r, k, seed)
    fragments = sample.fragments(y)
    l1 = fragment_likelihoods(h1, fragments)
    l2 = fragment_likelihoods(h2, fragments)

    mu1_hat = float(l1.mean())
    mu2_hat = float(l2.mean())
    mean_diff = mu1_hat - mu2_hat
    diffs = l1 - l2
    # np.std of a constant array can come out near 1e-16 instead of 0.
    zero_variance = bool(np.all(diffs == diffs[0]))
    sample_std = 0.0 if zero_variance else float(np.std(diffs, ddof=1))

    fragment_space = y.alphabet_size**r
    sparsity_ratio = fragment_space / len(y)
    sparsity_warning = sparsity_ratio > sparsity_warning_ratio
    if sparsity_warning:
        logger.warning(
            "r=%d: K^r/n = %.4f exceeds %.3g; fragments may not represent the distribution",
            r,
            sparsity_ratio,
            sparsity_warning_ratio,
        )

    if zero_variance:
        if diffs[0] != 0.0:
            identical = bool(np.all(fragments == fragments[0]))
            detail = (
                "all sampled fragments are identical"
                if identical
                else "paired differences are constant"
            )
            raise DegenerateVarianceError(
                f"r={r}: {detail}; the Z statistic is undefined",
                identical_fragments=identical,
            )
        z, p_value = 0.0, 0.5
    else:
        z, p_value = z_statistic(mean_diff, sample_std, k, p_value_floor=p_value_floor)

    return TestResult(
        r=r,
        k=k,
        n=len(y),
        seed=seed,
        fragment_space=fragment_space,
        sparsity_ratio=sparsity_ratio,
        sparsity_warning=sparsity_warning,
        mean_diff=mean_diff,
        sample_std=sample_std,
        z=z,
        p_value=p_value,
        p_value_two_sided=two_sided_p_value(z, p_value_floor=p_value_floor),
        mu1_hat=mu1_hat,
        mu2_hat=mu2_hat,
        zero_variance=zero_variance,
    )


def _ratio(after: float, before: float) -> float | None:
    return after / before if before > 0 else None


def sweep(
    y: Sequence,
    h1: Hmm,
    h2: Hmm,
    r_range: tuple[int, int],
    k: int,
    seed: int,
    *,
    full_log_likelihood: bool = False,
) -> SweepReport:
    """Run :func:`run_test` for each ``r`` in ``r_range`` (inclusive), seeded ``seed + r``."""
    r_min, r_max = r_range
    if r_min < 2:
        raise SamplingError(f"sweeps start at r >= 2, got {r_min}")
    if r_max < r_min:
        raise SamplingError(f"r_max ({r_max}) must be >= r_min ({r_min})")

    results = [run_test(y, h1, h2, r, k, seed + r) for r in range(r_min, r_max + 1)]
    ratios = [
        RatioRow(
            numerator_r=after.r,
            denominator_r=before.r,
            mu1_ratio=_ratio(after.mu1_hat, before.mu1_hat),
            mu2_ratio=_ratio(after.mu2_hat, before.mu2_hat),
        )
        for before, after in zip(results, results[1:])
    ]
    full_1 = full_2 = None
    if full_log_likelihood:
        full_1 = log_likelihood_full(h1, y)
        full_2 = log_likelihood_full(h2, y)
    report = SweepReport(
        model1_label=h1.label,
        model2_label=h2.label,
        sequence_length=len(y),
        alphabet_size=y.alphabet_size,
        results=results,
        ratios=ratios,
        full_log_likelihood_1=full_1,
        full_log_likelihood_2=full_2,
    )
    logger.info(
        "Sweep '%s' vs '%s' over r=%d..%d with k=%d", h1.label, h2.label, r_min, r_max, k
    )
    return report
