"""Baum-Welch fitting of discrete-emission HMMs.

Transition and emission rows start from a seeded symmetric Dirichlet(1) draw
and the initial-state law starts uniform. The initial-state law is estimated
during EM but dropped at export: the fitted model uses the stationary
distribution of its transition matrix.
"""
from __future__ import annotations

import logging

import numpy as np
import pandas as pd
from pydantic import ValidationError

from hmmfrag.models import Hmm, Sequence
from hmmfrag.schemas import FitConfig, FitResult

logger = logging.getLogger(__name__)


class FitError(ValueError):
    """Raised when no restart produces a usable model."""


def _forward_backward(
    start: np.ndarray,
    transition: np.ndarray,
    likelihoods: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Scaled recursions; returns log-likelihood, state posteriors and expected transitions."""
    length, n_states = likelihoods.shape
    alpha = np.empty((length, n_states))
    scales = np.empty(length)

    a = start * likelihoods[0]
    scales[0] = a.sum()
    alpha[0] = a / scales[0]
    for t in range(1, length):
        a = (alpha[t - 1] @ transition) * likelihoods[t]
        scales[t] = a.sum()
        alpha[t] = a / scales[t]

    beta = np.empty((length, n_states))
    beta[-1] = 1.0
    for t in range(length - 2, -1, -1):
        beta[t] = transition @ (likelihoods[t + 1] * beta[t + 1]) / scales[t + 1]

    posteriors = alpha * beta
    weighted = likelihoods[1:] * beta[1:] / scales[1:, None]
    expected_transitions = transition * (alpha[:-1].T @ weighted)
    return float(np.log(scales).sum()), posteriors, expected_transitions


def _normalized_rows(counts: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=1, keepdims=True)
    empty = totals[:, 0] <= 0
    rows = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    rows[empty] = fallback[empty]
    return rows


def _fit_single_state(y: Sequence, cfg: FitConfig) -> FitResult:
    counts = np.bincount(y.symbols, minlength=y.alphabet_size).astype(np.float64)
    frequencies = counts / counts.sum()
    present = frequencies > 0
    log_likelihood = float(counts[present] @ np.log(frequencies[present]))
    model = Hmm(
        label=cfg.label or "bw-1state",
        transition=[[1.0]],
        emission=[frequencies.tolist()],
    )
    return FitResult(
        model=model,
        log_likelihood_trace=[log_likelihood],
        converged=True,
        iterations_used=1,
        absent_symbols=np.flatnonzero(~present).tolist(),
    )


def _run_em(
    y: Sequence,
    cfg: FitConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, list[float], bool]:
    n_states, n_symbols = cfg.n_states, y.alphabet_size
    transition = rng.dirichlet(np.ones(n_states), size=n_states)
    emission = rng.dirichlet(np.ones(n_symbols), size=n_states)
    start = np.full(n_states, 1.0 / n_states)
    one_hot = np.eye(n_symbols)[y.symbols]

    trace: list[float] = []
    converged = False
    for iteration in range(cfg.max_iters):
        log_likelihood, posteriors, expected_transitions = _forward_backward(
            start, transition, emission[:, y.symbols].T
        )
        logger.debug("EM iteration %d: log-likelihood %.6f", iteration + 1, log_likelihood)
        if trace and log_likelihood - trace[-1] < cfg.tol * abs(trace[-1]):
            trace.append(log_likelihood)
            converged = True
            break
        trace.append(log_likelihood)
        if iteration == cfg.max_iters - 1:
            break
        start = posteriors[0] / posteriors[0].sum()
        transition = _normalized_rows(expected_transitions, transition)
        emission = _normalized_rows(posteriors.T @ one_hot, emission)
    return transition, emission, trace, converged


def fit(y: Sequence, cfg: FitConfig) -> FitResult:
    """Fit an ``cfg.n_states``-state model to ``y``, keeping the best restart.

    Restart ``i`` is seeded with ``cfg.seed + i``. A restart whose transition
    matrix has no unique stationary distribution is discarded.
    """
    if len(y) < cfg.n_states:
        raise FitError(
            f"sequence of length {len(y)} is shorter than the {cfg.n_states} requested states"
        )
    if cfg.n_states == 1:
        return _fit_single_state(y, cfg)

    present = np.bincount(y.symbols, minlength=y.alphabet_size) > 0
    absent_symbols = np.flatnonzero(~present).tolist()
    if absent_symbols:
        logger.warning("Symbols %s never occur; their emission columns go to zero", absent_symbols)

    best: FitResult | None = None
    for restart in range(cfg.n_restarts):
        rng = np.random.default_rng(cfg.seed + restart)
        transition, emission, trace, converged = _run_em(y, cfg, rng)
        try:
            model = Hmm(
                label=cfg.label or f"bw-{cfg.n_states}state",
                transition=transition.tolist(),
                emission=emission.tolist(),
            )
        except ValidationError as exc:
            logger.warning("Discarding restart %d: %s", restart, exc.errors()[0]["msg"])
            continue
        if not converged:
            logger.warning(
                "Restart %d stopped at max_iters=%d before reaching tol=%g",
                restart,
                cfg.max_iters,
                cfg.tol,
            )
        logger.info("Restart %d: log-likelihood %.6f after %d iterations", restart, trace[-1], len(trace))
        candidate = FitResult(
            model=model,
            log_likelihood_trace=trace,
            converged=converged,
            iterations_used=len(trace),
            best_restart=restart,
            absent_symbols=absent_symbols,
        )
        if best is None or candidate.final_log_likelihood > best.final_log_likelihood:
            best = candidate

    if best is None:
        raise FitError(
            f"all {cfg.n_restarts} restart(s) produced reducible transition matrices; "
            "try more restarts or a different seed"
        )
    return best


def loglik_trace_report(res: FitResult) -> str:
    """Iteration versus log-likelihood as CSV text."""
    frame = pd.DataFrame(
        {
            "iteration": range(1, len(res.log_likelihood_trace) + 1),
            "log_likelihood": res.log_likelihood_trace,
        }
    )
    return frame.to_csv(index=False, lineterminator="\n")
