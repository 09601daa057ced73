"""Shared pytest fixtures and brute-force oracles."""
from __future__ import annotations

import itertools
from typing import Callable

import numpy as np
import pytest

from hmmfrag.models import Hmm
from hmmfrag.services import files


@pytest.fixture(scope="session")
def ozone3() -> Hmm:
    """Fitted 3-state model (model 1 of the ozone study)."""
    return files.load_bundled_model("ozone-3state")


@pytest.fixture(scope="session")
def ozone4() -> Hmm:
    """Fitted 4-state model (model 2 of the ozone study)."""
    return files.load_bundled_model("ozone-4state")


@pytest.fixture()
def two_state() -> Hmm:
    return Hmm(
        label="two-state",
        transition=[[0.9, 0.1], [0.2, 0.8]],
        emission=[[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]],
    )


@pytest.fixture()
def periodic() -> Hmm:
    """Two states that strictly alternate; its pair operators have a ``-lambda`` eigenvalue."""
    return Hmm(
        label="periodic",
        transition=[[0.0, 1.0], [1.0, 0.0]],
        emission=[[0.9, 0.1], [0.2, 0.8]],
    )


@pytest.fixture()
def iid_uniform() -> Hmm:
    """One state emitting three symbols with equal probability."""
    return Hmm(label="iid-uniform", transition=[[1.0]], emission=[[1 / 3, 1 / 3, 1 / 3]])


def _random_hmm(rng: np.random.Generator, n_states: int, n_symbols: int, label: str) -> Hmm:
    return Hmm(
        label=label,
        transition=rng.dirichlet(np.ones(n_states), size=n_states).tolist(),
        emission=rng.dirichlet(np.ones(n_symbols), size=n_states).tolist(),
    )


@pytest.fixture()
def random_hmm() -> Callable[..., Hmm]:
    """Factory for seeded random models with dense positive matrices."""

    def build(seed: int, n_states: int = 2, n_symbols: int = 3, label: str = "random") -> Hmm:
        return _random_hmm(np.random.default_rng(seed), n_states, n_symbols, label)

    return build


def path_likelihood(h: Hmm, fragment: tuple[int, ...]) -> float:
    """Fragment likelihood by summing the weight of every hidden-state path.

    A path is ``x_0 .. x_r`` with ``x_0`` drawn from the stationary law and
    weight ``pi(x_0) prod_t P(x_{t-1}, x_t) S(x_t, y_t)``.
    """
    paths = np.array(list(itertools.product(range(h.n_states), repeat=len(fragment) + 1)))
    weights = h.stationary[paths[:, 0]].copy()
    for t, symbol in enumerate(fragment, start=1):
        weights *= h.P[paths[:, t - 1], paths[:, t]] * h.S[paths[:, t], symbol]
    return float(weights.sum())


def all_fragments(n_symbols: int, r: int):
    return itertools.product(range(n_symbols), repeat=r)


@pytest.fixture()
def enumerate_mu() -> Callable[[Hmm, Hmm, int], float]:
    """``sum_s l_0(s) l_j(s)`` over every length-``r`` fragment."""

    def compute(h0: Hmm, hj: Hmm, r: int) -> float:
        return sum(
            path_likelihood(h0, s) * path_likelihood(hj, s) for s in all_fragments(h0.n_symbols, r)
        )

    return compute


@pytest.fixture()
def likelihood_table() -> Callable[[Hmm, int], np.ndarray]:
    """Path-enumerated likelihoods of every length-``r`` fragment, in lexicographic order."""

    def compute(h: Hmm, r: int) -> np.ndarray:
        return np.array([path_likelihood(h, s) for s in all_fragments(h.n_symbols, r)])

    return compute
