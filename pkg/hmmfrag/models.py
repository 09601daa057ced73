"""Validated domain types: discrete-emission HMMs and encoded sequences."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import List

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from hmmfrag import kernels


class SequenceError(ValueError):
    """Raised when symbols do not form a valid encoded sequence."""


class Hmm(BaseModel):
    """A hidden Markov model with ``N`` hidden states and ``K`` symbols.

    The JSON form is ``{label, transition, emission}``. The stationary
    distribution is always recomputed from ``transition``; a ``stationary``
    key in the input is ignored.
    """

    model_config = ConfigDict(frozen=True, extra="ignore")

    label: str = "hmm"
    transition: List[List[float]]
    emission: List[List[float]]

    @field_validator("transition", "emission", mode="after")
    @classmethod
    def _normalize_rows(cls, value: List[List[float]]) -> List[List[float]]:
        return kernels.as_stochastic_matrix(value).tolist()

    @model_validator(mode="after")
    def _check_shapes(self):
        n_rows, n_cols = len(self.transition), len(self.transition[0])
        if n_rows != n_cols:
            raise ValueError(f"transition matrix must be square, got {n_rows}x{n_cols}")
        if len(self.emission) != n_rows:
            raise ValueError(
                f"emission matrix has {len(self.emission)} rows for {n_rows} hidden states"
            )
        # Resolves the stationary law now so reducible chains fail at construction.
        self.stationary
        return self

    # Cached arrays live in __dict__, so compare declared fields only.
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hmm):
            return NotImplemented
        return (self.label, self.transition, self.emission) == (
            other.label,
            other.transition,
            other.emission,
        )

    def __hash__(self) -> int:
        return hash(
            (
                self.label,
                tuple(map(tuple, self.transition)),
                tuple(map(tuple, self.emission)),
            )
        )

    @property
    def n_states(self) -> int:
        return len(self.transition)

    @property
    def n_symbols(self) -> int:
        return len(self.emission[0])

    @cached_property
    def P(self) -> kernels.StochasticMatrix:
        return kernels.as_matrix(self.transition)

    @cached_property
    def S(self) -> kernels.StochasticMatrix:
        return kernels.as_matrix(self.emission)

    @cached_property
    def stationary(self) -> kernels.ProbVector:
        return kernels.stationary_distribution(self.P)

    @cached_property
    def operators(self) -> np.ndarray:
        """Stack of ``M(m) = P Diag(S[:, m])`` with shape ``(K, N, N)``."""
        stack = self.P[None, :, :] * self.S.T[:, None, :]
        stack.setflags(write=False)
        return stack


@dataclass(frozen=True, eq=False)
class Sequence:
    """An encoded observation series over the alphabet ``0..alphabet_size-1``."""

    symbols: np.ndarray
    alphabet_size: int

    def __post_init__(self) -> None:
        raw = np.asarray(self.symbols)
        if raw.ndim != 1:
            raise SequenceError("sequence symbols must be one-dimensional")
        if raw.size < 1:
            raise SequenceError("sequence must contain at least one symbol")
        if self.alphabet_size < 1:
            raise SequenceError("alphabet size must be at least 1")
        if raw.dtype.kind not in "iu":
            if raw.dtype.kind != "f" or not np.all(np.equal(np.mod(raw, 1), 0)):
                raise SequenceError("sequence symbols must be integers")
        symbols = raw.astype(np.int64)
        if symbols.min() < 0 or symbols.max() >= self.alphabet_size:
            raise SequenceError(
                f"symbols must lie in [0, {self.alphabet_size - 1}], "
                f"found range [{symbols.min()}, {symbols.max()}]"
            )
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def from_symbols(cls, symbols: npt.ArrayLike, alphabet_size: int | None = None) -> "Sequence":
        """Build a sequence, inferring the alphabet from the largest symbol if needed."""
        array = np.asarray(symbols)
        if alphabet_size is None:
            alphabet_size = int(array.max()) + 1 if array.size else 1
        return cls(array, alphabet_size)

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sequence):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and np.array_equal(
            self.symbols, other.symbols
        )

    def __hash__(self) -> int:
        return hash((self.alphabet_size, self.symbols.tobytes()))

    def fragment(self, start: int, r: int) -> "Sequence":
        """Return the contiguous length-``r`` window starting at ``start``."""
        if start < 0 or start + r > len(self):
            raise SequenceError(f"fragment [{start}, {start + r}) outside sequence of length {len(self)}")
        return Sequence(self.symbols[start:start + r], self.alphabet_size)


@dataclass(frozen=True)
class SymbolOperator:
    """``M(m) = P Diag(S[:, m])`` for one symbol ``m``."""

    matrix: np.ndarray
    symbol: int
