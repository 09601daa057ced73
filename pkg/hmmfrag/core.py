"""Fragment likelihoods, full-sequence log-likelihood and simulation.

Fragments are evaluated with raw forward products, which stay exact and fast
for the short lengths the fragment test uses. Full sequences use the scaled
forward recursion instead. Both start from the stationary distribution.
"""
from __future__ import annotations

import logging
import math
from bisect import bisect_right

import numpy as np
import numpy.typing as npt

from hmmfrag.models import Hmm, Sequence, SymbolOperator

logger = logging.getLogger(__name__)


class SymbolRangeError(ValueError):
    """Raised when a symbol index is outside the model's alphabet."""


class EmptyFragmentError(ValueError):
    """Raised when a likelihood is requested for an empty fragment."""


class AlphabetMismatchError(ValueError):
    """Raised when a sequence and a model disagree on the alphabet size."""


def check_alphabet(h: Hmm, alphabet_size: int) -> None:
    if alphabet_size != h.n_symbols:
        raise AlphabetMismatchError(
            f"model '{h.label}' emits {h.n_symbols} symbols but the sequence "
            f"alphabet has {alphabet_size}"
        )


def symbol_operator(h: Hmm, m: int) -> SymbolOperator:
    """Return ``M(m) = P Diag(S[:, m])``."""
    if not 0 <= m < h.n_symbols:
        raise SymbolRangeError(f"symbol {m} outside alphabet 0..{h.n_symbols - 1}")
    return SymbolOperator(matrix=h.operators[m], symbol=m)


def _as_fragment_array(h: Hmm, s: Sequence | npt.ArrayLike) -> np.ndarray:
    if isinstance(s, Sequence):
        check_alphabet(h, s.alphabet_size)
        return s.symbols
    symbols = np.asarray(s, dtype=np.int64)
    if symbols.size == 0:
        raise EmptyFragmentError("cannot evaluate the likelihood of an empty fragment")
    if symbols.min() < 0 or symbols.max() >= h.n_symbols:
        raise SymbolRangeError(f"fragment symbols outside alphabet 0..{h.n_symbols - 1}")
    return symbols


def fragment_likelihood(h: Hmm, s: Sequence | npt.ArrayLike) -> float:
    """Probability that ``h`` emits the fragment ``s``.

    Computes ``pi^T M(y_1) ... M(y_r) 1`` left to right.
    """
    symbols = _as_fragment_array(h, s)
    alpha = h.stationary
    for y in symbols:
        alpha = alpha @ h.operators[y]
    return float(alpha.sum())


def fragment_likelihoods(h: Hmm, fragments: npt.ArrayLike) -> np.ndarray:
    """Vectorized :func:`fragment_likelihood` over a ``(k, r)`` array of fragments."""
    block = np.asarray(fragments, dtype=np.int64)
    if block.ndim != 2 or block.shape[1] == 0:
        raise EmptyFragmentError("fragments must form a non-empty (k, r) array")
    if block.size and (block.min() < 0 or block.max() >= h.n_symbols):
        raise SymbolRangeError(f"fragment symbols outside alphabet 0..{h.n_symbols - 1}")
    alpha = np.broadcast_to(h.stationary, (block.shape[0], h.n_states))
    for t in range(block.shape[1]):
        alpha = (alpha @ h.P) * h.S[:, block[:, t]].T
    return alpha.sum(axis=1)


def log_likelihood_full(h: Hmm, y: Sequence) -> float:
    """Log-likelihood of a whole sequence by the scaled forward algorithm.

    Returns ``-inf`` when the sequence is impossible under ``h``.
    """
    check_alphabet(h, y.alphabet_size)
    alpha = h.stationary
    total = 0.0
    for t, symbol in enumerate(y.symbols):
        alpha = (alpha @ h.P) * h.S[:, symbol]
        scale = alpha.sum()
        if scale <= 0.0:
            logger.warning(
                "Sequence is impossible under model '%s' (first impossible position %d)",
                h.label,
                t,
            )
            return -math.inf
        total += math.log(scale)
        alpha = alpha / scale
    return total


def simulate(h: Hmm, n: int, seed: int) -> Sequence:
    """Draw ``n`` observations from ``h`` using a seeded PCG64 generator.

    The hidden chain starts from the stationary distribution. Identical
    ``(h, n, seed)`` always yields the identical sequence.
    """
    if n < 1:
        raise ValueError("simulation length must be at least 1")
    rng = np.random.default_rng(seed)
    state_draws = rng.random(n).tolist()
    symbol_draws = rng.random(n)

    last_state = h.n_states - 1
    cumulative_rows = np.cumsum(h.P, axis=1).tolist()
    states = np.empty(n, dtype=np.int64)
    x = min(bisect_right(np.cumsum(h.stationary).tolist(), state_draws[0]), last_state)
    states[0] = x
    for t in range(1, n):
        x = min(bisect_right(cumulative_rows[x], state_draws[t]), last_state)
        states[t] = x

    cumulative_emission = np.cumsum(h.S, axis=1)
    symbols = np.empty(n, dtype=np.int64)
    for state in range(h.n_states):
        mask = states == state
        symbols[mask] = np.searchsorted(
            cumulative_emission[state], symbol_draws[mask], side="right"
        )
    np.minimum(symbols, h.n_symbols - 1, out=symbols)
    return Sequence(symbols, h.n_symbols)
