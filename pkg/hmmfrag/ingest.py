"""CSV ingestion and empirical-quantile discretization."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from hmmfrag.models import Sequence
from hmmfrag.schemas import DiscretizationSpec

logger = logging.getLogger(__name__)

MISSING_TOKENS = {"", "na", "nan", "null", "none"}
DEFAULT_LABELS = {2: ["low", "high"], 3: ["low", "medium", "high"]}


class IngestError(ValueError):
    """Raised for unreadable input or series that cannot be discretized."""

    def __init__(self, message: str, *, path: Path | None = None, line: int | None = None):
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class MissingPolicy(str, Enum):
    """How empty or NA cells are handled."""

    DROP = "drop"
    ERROR = "error"
    FORWARD_FILL = "forward_fill"


@dataclass(frozen=True)
class RawSeries:
    values: np.ndarray
    source: Path
    column: str
    missing_count: int = 0


def load_csv(
    path: Path | str,
    column: str,
    missing_policy: MissingPolicy | str = MissingPolicy.ERROR,
    *,
    delimiter: str = ",",
) -> RawSeries:
    """Read one numeric column of a headed CSV file.

    Empty or NA cells follow ``missing_policy``. Non-numeric text is always an
    error, reported with its file line (the header is line 1).
    """
    path = Path(path)
    policy = MissingPolicy(missing_policy)
    try:
        frame = pd.read_csv(
            path, sep=delimiter, dtype=str, keep_default_na=False, skip_blank_lines=False
        )
    except FileNotFoundError as exc:
        raise IngestError("file not found", path=path) from exc
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot parse CSV ({exc})", path=path) from exc
    if column not in frame.columns:
        available = ", ".join(map(str, frame.columns))
        raise IngestError(f"column '{column}' not found (available: {available})", path=path)

    cells = frame[column].fillna("").str.strip()
    missing = cells.str.lower().isin(MISSING_TOKENS)
    parsed = pd.to_numeric(cells.where(~missing), errors="coerce")
    unparseable = parsed.isna() & ~missing
    if unparseable.any():
        row = int(np.flatnonzero(unparseable.to_numpy())[0])
        raise IngestError(f"cannot parse '{cells.iloc[row]}' as a number", path=path, line=row + 2)

    missing_count = int(missing.sum())
    if missing_count:
        first = int(np.flatnonzero(missing.to_numpy())[0])
        if policy is MissingPolicy.ERROR:
            raise IngestError("missing value", path=path, line=first + 2)
        if policy is MissingPolicy.FORWARD_FILL:
            if first == 0:
                raise IngestError("cannot forward-fill a missing first value", path=path, line=2)
            parsed = parsed.ffill()
        else:
            parsed = parsed.dropna()
        logger.info("%s: %d missing value(s) handled by policy %s", path, missing_count, policy.value)

    values = parsed.to_numpy(dtype=np.float64)
    if values.size == 0:
        raise IngestError(f"column '{column}' has no values", path=path)
    if not np.all(np.isfinite(values)):
        raise IngestError(f"column '{column}' contains non-finite values", path=path)
    return RawSeries(values=values, source=path, column=column, missing_count=missing_count)


def _labels_for(n_bins: int) -> list[str]:
    return DEFAULT_LABELS.get(n_bins, [f"bin{i}" for i in range(n_bins)])


def apply_discretization(series: RawSeries, spec: DiscretizationSpec) -> Sequence:
    """Encode values with saved cut points; a value equal to a cut point goes up."""
    symbols = np.digitize(series.values, np.asarray(spec.cut_points), right=False)
    return Sequence(symbols, spec.n_bins)


def discretize(series: RawSeries, n_bins: int = 3) -> tuple[Sequence, DiscretizationSpec]:
    """Bin a series at its empirical ``i / n_bins`` quantiles (linear interpolation)."""
    if n_bins < 2:
        raise IngestError(f"need at least 2 bins, got {n_bins}")
    probabilities = np.arange(1, n_bins) / n_bins
    cut_points = np.quantile(series.values, probabilities, method="linear")
    if np.any(np.diff(cut_points) <= 0) or (
        n_bins == 2 and series.values.min() == series.values.max()
    ):
        raise IngestError(
            f"empirical quantiles for {n_bins} bins coincide ({cut_points.tolist()}); "
            "the series has too many ties, use fewer bins"
        )
    spec = DiscretizationSpec(
        n_bins=n_bins,
        cut_points=cut_points.tolist(),
        labels=_labels_for(n_bins),
    )
    return apply_discretization(series, spec), spec


def save_spec(spec: DiscretizationSpec, path: Path | str) -> None:
    Path(path).write_text(spec.model_dump_json(indent=2) + "\n")


def load_spec(path: Path | str) -> DiscretizationSpec:
    try:
        return DiscretizationSpec.model_validate(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid discretization spec JSON ({exc.msg})", path=Path(path)) from exc
