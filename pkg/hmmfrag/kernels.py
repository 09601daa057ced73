"""Small dense linear-algebra primitives shared by the numeric modules.

Matrices are plain ``numpy`` float arrays. The ``as_*`` constructors validate
and return read-only copies, so values built here can be shared freely.
"""
from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from hmmfrag.config import settings

Matrix = npt.NDArray[np.float64]
StochasticMatrix = npt.NDArray[np.float64]
ProbVector = npt.NDArray[np.float64]

logger = logging.getLogger(__name__)


class MatrixFormatError(ValueError):
    """Raised when entries do not form a valid matrix or probability object."""


class KroneckerSizeError(ValueError):
    """Raised when a Kronecker product would exceed the configured size cap."""


class ReducibleChainError(ValueError):
    """Raised when a transition matrix has no unique stationary distribution."""


class ConvergenceError(RuntimeError):
    """Raised when power iteration does not reach the residual tolerance."""

    def __init__(self, message: str, *, estimate: float, residual: float, iterations: int):
        super().__init__(message)
        self.estimate = estimate
        self.residual = residual
        self.iterations = iterations


class EigenEstimate(NamedTuple):
    value: float
    residual: float


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def as_matrix(entries: npt.ArrayLike) -> Matrix:
    """Return a read-only 2-D float copy of ``entries``."""
    try:
        matrix = np.array(entries, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MatrixFormatError("matrix entries must be real numbers") from exc
    if matrix.ndim != 2:
        raise MatrixFormatError(f"expected a 2-D matrix, got {matrix.ndim} dimension(s)")
    rows, cols = matrix.shape
    if rows < 1 or cols < 1:
        raise MatrixFormatError("matrix needs at least one row and one column")
    if not np.all(np.isfinite(matrix)):
        raise MatrixFormatError("matrix entries must be finite")
    return _frozen(matrix)


def as_stochastic_matrix(
    entries: npt.ArrayLike,
    *,
    tol: float | None = None,
    repair_tol: float | None = None,
) -> StochasticMatrix:
    """Validate a row-stochastic matrix and re-normalize its rows.

    Rows off by at most ``tol`` are re-normalized silently; rows off by at most
    ``repair_tol`` (rounded fitted values) are re-normalized with a debug log.
    Anything further from one is an error.
    """
    tol = settings.row_sum_tol if tol is None else tol
    repair_tol = settings.row_sum_repair_tol if repair_tol is None else repair_tol
    matrix = np.array(as_matrix(entries))
    if np.any(matrix < 0):
        raise MatrixFormatError("stochastic matrix entries must be non-negative")
    row_sums = matrix.sum(axis=1)
    deviation = np.abs(row_sums - 1.0)
    worst = int(np.argmax(deviation))
    if deviation[worst] > repair_tol:
        raise MatrixFormatError(
            f"row {worst} sums to {row_sums[worst]!r}; rows must sum to 1"
        )
    if deviation[worst] > tol:
        logger.debug("Re-normalizing rows off by up to %.3g", deviation[worst])
    return _frozen(matrix / row_sums[:, None])


def as_prob_vector(entries: npt.ArrayLike, *, tol: float | None = None) -> ProbVector:
    """Validate a probability vector summing to one within ``tol``."""
    tol = settings.row_sum_tol if tol is None else tol
    vector = np.array(entries, dtype=np.float64)
    if vector.ndim != 1 or vector.size < 1:
        raise MatrixFormatError("probability vector must be 1-D and non-empty")
    if not np.all(np.isfinite(vector)) or np.any(vector < 0):
        raise MatrixFormatError("probabilities must be finite and non-negative")
    total = vector.sum()
    if abs(total - 1.0) > tol:
        raise MatrixFormatError(f"probabilities sum to {total!r}, expected 1")
    return _frozen(vector / total)


def kronecker(a: npt.ArrayLike, b: npt.ArrayLike, *, max_entries: int | None = None) -> Matrix:
    """Kronecker product with the first factor's index varying slowest.

    Row ``i * b.rows + k`` and column ``j * b.cols + l`` of the result hold
    ``a[i, j] * b[k, l]``.
    """
    max_entries = settings.kronecker_max_entries if max_entries is None else max_entries
    left = np.atleast_2d(np.asarray(a, dtype=np.float64))
    right = np.atleast_2d(np.asarray(b, dtype=np.float64))
    rows = left.shape[0] * right.shape[0]
    cols = left.shape[1] * right.shape[1]
    if rows * cols > max_entries:
        raise KroneckerSizeError(
            f"Kronecker product of {left.shape} and {right.shape} has {rows * cols} "
            f"entries (cap {max_entries})"
        )
    return np.kron(left, right)


def stationary_distribution(p: npt.ArrayLike, *, rank_tol: float | None = None) -> ProbVector:
    """Solve ``pi^T p = pi^T`` with ``sum(pi) = 1`` as a linear system.

    The singular system ``(p^T - I) pi = 0`` must have a one-dimensional null
    space; one of its equations is replaced by the normalization row.
    """
    rank_tol = settings.stationary_rank_tol if rank_tol is None else rank_tol
    matrix = as_matrix(p)
    n, m = matrix.shape
    if n != m:
        raise MatrixFormatError(f"transition matrix must be square, got {matrix.shape}")
    system = matrix.T - np.eye(n)
    rank = np.linalg.matrix_rank(system, tol=rank_tol)
    if rank < n - 1:
        raise ReducibleChainError(
            f"stationary distribution is not unique (rank {rank} < {n - 1}); "
            "the chain is reducible"
        )
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise ReducibleChainError("stationary system is singular; the chain is reducible") from exc
    pi = np.clip(pi, 0.0, None)
    return _frozen(pi / pi.sum())


def dominant_eigenvalue(
    w: npt.ArrayLike,
    tol: float | None = None,
    max_iters: int | None = None,
) -> EigenEstimate:
    """Perron root of a non-negative square matrix by power iteration.

    Iterates on ``w + I`` from the all-ones vector, keeping the iterate scaled
    to unit max-norm, and reports the Rayleigh quotient with the residual
    ``||w v - lambda v||_inf``. The shift keeps the Perron vector and makes the
    Perron root strictly dominant, so periodic matrices with an eigenvalue
    ``-lambda`` converge too.
    """
    tol = settings.eigen_tol if tol is None else tol
    max_iters = settings.eigen_max_iters if max_iters is None else max_iters
    matrix = as_matrix(w)
    n, m = matrix.shape
    if n != m:
        raise MatrixFormatError(f"power iteration needs a square matrix, got {matrix.shape}")
    if np.any(matrix < 0):
        raise MatrixFormatError("power iteration expects non-negative entries")

    v = np.ones(n)
    estimate, residual = 0.0, np.inf
    for _ in range(max_iters):
        wv = matrix @ v
        estimate = float(v @ wv / (v @ v))
        residual = float(np.max(np.abs(wv - estimate * v)))
        if residual < tol:
            return EigenEstimate(estimate, residual)
        shifted = wv + v
        v = shifted / np.max(shifted)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iters} iterations "
        f"(estimate {estimate!r}, residual {residual:.3g})",
        estimate=estimate,
        residual=residual,
        iterations=max_iters,
    )
