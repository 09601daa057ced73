"""Closed-form fragment metrics from Kronecker operators.

``mu_j(r)`` is the probability that two independent length-``r`` sequences,
one from the reference model ``h0`` and one from ``hj``, coincide. It equals
``(pi_0 (x) pi_j) W_j^r 1`` with ``W_j = sum_m M_0(m) (x) M_j(m)``. Second
moments of fragment likelihoods use the analogous three-factor operator.

Powers are applied as repeated vector-matrix products; ``W^r`` is never formed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from hmmfrag import kernels
from hmmfrag.config import settings
from hmmfrag.core import AlphabetMismatchError
from hmmfrag.models import Hmm
from hmmfrag.schemas import ExactComparison, ExactReport, ExactRow

logger = logging.getLogger(__name__)


class OperatorConsistencyError(ArithmeticError):
    """Raised when the two constructions of a pair operator disagree."""


class NumericalConsistencyError(ArithmeticError):
    """Raised when a second moment or variance is clearly negative."""


@dataclass(frozen=True)
class PairOperator:
    """``W = sum_m M_0(m) (x) M_j(m)`` with its left vector ``pi_0 (x) pi_j``."""

    w: np.ndarray
    left: np.ndarray
    dims: tuple[int, int]


@dataclass(frozen=True)
class TripleOperator:
    """``sum_m M_0(m) (x) M_a(m) (x) M_b(m)`` with left vector ``pi_0 (x) pi_a (x) pi_b``."""

    w3: np.ndarray
    left: np.ndarray


@dataclass(frozen=True)
class GrowthRatios:
    """Exact ratios ``mu(r + 1) / mu(r)`` and the Perron root they approach."""

    ratios: list[tuple[int, float]]
    dominant: float


def _check_alphabets(*models: Hmm) -> None:
    sizes = {h.n_symbols for h in models}
    if len(sizes) > 1:
        labels = ", ".join(f"'{h.label}'={h.n_symbols}" for h in models)
        raise AlphabetMismatchError(f"models disagree on alphabet size: {labels}")


def _operator_sum(*models: Hmm) -> np.ndarray:
    return sum(
        reduce(kernels.kronecker, (h.operators[m] for h in models))
        for m in range(models[0].n_symbols)
    )


def pair_operator(h0: Hmm, hj: Hmm, *, verify: bool | None = None) -> PairOperator:
    """Build ``W_j`` by the symbol sum, optionally checking the factored form.

    The factored form is ``(P_0 (x) P_j) Diag(vec)`` with ``vec`` the row-major
    flattening of ``S_0 S_j^T`` (the column-major vec of ``S_j S_0^T``).
    """
    _check_alphabets(h0, hj)
    verify = settings.verify_operators if verify is None else verify
    w = _operator_sum(h0, hj)
    if verify:
        factored = kernels.kronecker(h0.P, hj.P) * (h0.S @ hj.S.T).ravel()[None, :]
        gap = float(np.max(np.abs(w - factored)))
        if gap > settings.operator_check_tol:
            raise OperatorConsistencyError(
                f"pair operator constructions differ by {gap:.3g} for "
                f"'{h0.label}' and '{hj.label}'"
            )
    left = kernels.kronecker(h0.stationary, hj.stationary).ravel()
    return PairOperator(w=w, left=left, dims=(h0.n_states, hj.n_states))


def triple_operator(h0: Hmm, ha: Hmm, hb: Hmm) -> TripleOperator:
    _check_alphabets(h0, ha, hb)
    w3 = _operator_sum(h0, ha, hb)
    left = reduce(kernels.kronecker, (h0.stationary, ha.stationary, hb.stationary)).ravel()
    return TripleOperator(w3=w3, left=left)


def _power_series(left: np.ndarray, w: np.ndarray, r_max: int) -> list[float]:
    """``[left W^r 1 for r in 1..r_max]`` by repeated application."""
    values = []
    v = left
    for _ in range(r_max):
        v = v @ w
        values.append(float(v.sum()))
    return values


def _require_length(r: int) -> None:
    if r < 1:
        raise ValueError(f"fragment length must be at least 1, got {r}")


def mu_series(h0: Hmm, hj: Hmm, r_max: int) -> list[float]:
    """``[mu_j(1), ..., mu_j(r_max)]``."""
    _require_length(r_max)
    op = pair_operator(h0, hj)
    return _power_series(op.left, op.w, r_max)


def exact_mu(h0: Hmm, hj: Hmm, r: int) -> float:
    """Expected likelihood under ``hj`` of a length-``r`` fragment drawn from ``h0``."""
    return mu_series(h0, hj, r)[-1]


def cross_moment(h0: Hmm, ha: Hmm, hb: Hmm, r: int) -> float:
    """``E[L_a(r) L_b(r)]`` for a fragment drawn from ``h0``."""
    _require_length(r)
    op = triple_operator(h0, ha, hb)
    return _power_series(op.left, op.w3, r)[-1]


def _clamp_nonnegative(value: float, what: str) -> float:
    if value < -settings.negative_variance_tol:
        raise NumericalConsistencyError(f"{what} is negative ({value!r})")
    return max(value, 0.0)


def second_moment(h0: Hmm, h1: Hmm, h2: Hmm, r: int) -> float:
    """``E[(L_1(r) - L_2(r))^2]`` under ``h0``.

    This is the squared-difference moment, not the square of ``mu_1 - mu_2``.
    """
    _check_alphabets(h0, h1, h2)
    value = (
        cross_moment(h0, h1, h1, r)
        - 2.0 * cross_moment(h0, h1, h2, r)
        + cross_moment(h0, h2, h2, r)
    )
    return _clamp_nonnegative(value, "second moment")


def likelihood_variance(h0: Hmm, hj: Hmm, r: int) -> float:
    """``Var(L_j(r))`` for fragments drawn from ``h0``."""
    mu = exact_mu(h0, hj, r)
    return _clamp_nonnegative(cross_moment(h0, hj, hj, r) - mu * mu, "likelihood variance")


def _cross_series(h0: Hmm, ha: Hmm, hb: Hmm, r_max: int) -> list[float]:
    op = triple_operator(h0, ha, hb)
    return _power_series(op.left, op.w3, r_max)


def _assemble(
    r: int,
    mu_1: float,
    mu_2: float,
    cross: tuple[float, float, float],
    lambdas: tuple[float, float],
) -> ExactComparison:
    """One comparison from ``mu_j(r)``, the three cross moments and both Perron roots.

    ``cross`` holds ``E[L_1 L_1]``, ``E[L_1 L_2]`` and ``E[L_2 L_2]`` in that order.
    """
    c11, c12, c22 = cross
    moment = _clamp_nonnegative(c11 - 2.0 * c12 + c22, "second moment")
    mu_12 = mu_1 - mu_2
    sigma2 = _clamp_nonnegative(moment - mu_12 * mu_12, "variance of the likelihood difference")
    return ExactComparison(
        r=r,
        mu_1=mu_1,
        mu_2=mu_2,
        mu_12=mu_12,
        second_moment=moment,
        sigma2=sigma2,
        variance_1=_clamp_nonnegative(c11 - mu_1 * mu_1, "likelihood variance"),
        variance_2=_clamp_nonnegative(c22 - mu_2 * mu_2, "likelihood variance"),
        lambda_1=lambdas[0],
        lambda_2=lambdas[1],
    )


def exact_comparison(h0: Hmm, h1: Hmm, h2: Hmm, r: int) -> ExactComparison:
    """Assemble means, second moment, variance and growth rates at length ``r``."""
    _check_alphabets(h0, h1, h2)
    _require_length(r)
    op_1, op_2 = pair_operator(h0, h1), pair_operator(h0, h2)
    return _assemble(
        r,
        _power_series(op_1.left, op_1.w, r)[-1],
        _power_series(op_2.left, op_2.w, r)[-1],
        (
            cross_moment(h0, h1, h1, r),
            cross_moment(h0, h1, h2, r),
            cross_moment(h0, h2, h2, r),
        ),
        (
            kernels.dominant_eigenvalue(op_1.w).value,
            kernels.dominant_eigenvalue(op_2.w).value,
        ),
    )


def _ratios(values: list[float]) -> list[float]:
    return [
        after / before if before > 0 else math.nan
        for before, after in zip(values, values[1:])
    ]


def growth_ratios(h0: Hmm, hj: Hmm, r_max: int) -> GrowthRatios:
    """Exact ``mu_j(r + 1) / mu_j(r)`` for ``r = 1..r_max - 1``."""
    if r_max < 2:
        raise ValueError("growth ratios need r_max >= 2")
    op = pair_operator(h0, hj)
    series = _power_series(op.left, op.w, r_max)
    ratios = list(enumerate(_ratios(series), start=1))
    return GrowthRatios(ratios=ratios, dominant=kernels.dominant_eigenvalue(op.w).value)


def _threshold(upper: list[float], lower: list[float]) -> int | None:
    threshold = None
    for r in range(len(upper), 0, -1):
        if upper[r - 1] > lower[r - 1]:
            threshold = r
        else:
            break
    return threshold


def dominance_threshold(h0: Hmm, h1: Hmm, h2: Hmm, r_max: int) -> int | None:
    """Smallest ``r*`` with ``mu_1(r) > mu_2(r)`` for every ``r`` in ``[r*, r_max]``.

    Returns ``None`` when ``mu_1(r_max) <= mu_2(r_max)``. Ties count as no dominance.
    """
    _require_length(r_max)
    _check_alphabets(h0, h1, h2)
    return _threshold(mu_series(h0, h1, r_max), mu_series(h0, h2, r_max))


def exact_report(
    h0: Hmm,
    h1: Hmm,
    h2: Hmm,
    r_min: int,
    r_max: int,
    *,
    k: int | None = None,
) -> ExactReport:
    """Exact table over ``r_min..r_max`` with growth ratios and dominance thresholds.

    With ``k`` given, each row also carries the expected Z of a ``k``-fragment
    test, ``mu_12 / sqrt(sigma2 / k)``.
    """
    _require_length(r_min)
    if r_max < r_min:
        raise ValueError(f"r_max ({r_max}) must be >= r_min ({r_min})")
    _check_alphabets(h0, h1, h2)
    op_1, op_2 = pair_operator(h0, h1), pair_operator(h0, h2)
    mu_1 = _power_series(op_1.left, op_1.w, r_max + 1)
    mu_2 = _power_series(op_2.left, op_2.w, r_max + 1)
    ratio_1, ratio_2 = _ratios(mu_1), _ratios(mu_2)
    cross = list(
        zip(
            _cross_series(h0, h1, h1, r_max),
            _cross_series(h0, h1, h2, r_max),
            _cross_series(h0, h2, h2, r_max),
        )
    )
    lambdas = (
        kernels.dominant_eigenvalue(op_1.w).value,
        kernels.dominant_eigenvalue(op_2.w).value,
    )

    rows = []
    for r in range(r_min, r_max + 1):
        comparison = _assemble(r, mu_1[r - 1], mu_2[r - 1], cross[r - 1], lambdas)
        expected_z = None
        if k is not None and comparison.sigma2 > 0:
            expected_z = comparison.mu_12 / math.sqrt(comparison.sigma2 / k)
        rows.append(
            ExactRow(
                **comparison.model_dump(),
                ratio_1=ratio_1[r - 1],
                ratio_2=ratio_2[r - 1],
                expected_z=expected_z,
            )
        )
    threshold_12 = _threshold(mu_1[:r_max], mu_2[:r_max])
    threshold_21 = _threshold(mu_2[:r_max], mu_1[:r_max])
    logger.info(
        "Exact report r=%d..%d: threshold(1>2)=%s threshold(2>1)=%s",
        r_min,
        r_max,
        threshold_12,
        threshold_21,
    )
    return ExactReport(
        reference_label=h0.label,
        model1_label=h1.label,
        model2_label=h2.label,
        k=k,
        rows=rows,
        lambda_1=rows[0].lambda_1,
        lambda_2=rows[0].lambda_2,
        threshold_1_over_2=threshold_12,
        threshold_2_over_1=threshold_21,
    )
