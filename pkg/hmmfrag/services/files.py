"""File-system helpers for sequences and model JSON."""
from __future__ import annotations

import json
import logging
import re
from importlib import resources
from pathlib import Path

import numpy as np

from hmmfrag.models import Hmm, Sequence, SequenceError

BUNDLED_PREFIX = "bundled:"
_SAFE_NAME_PATTERN = re.compile(r"^[A-Za-z0-9._-]+$")

logger = logging.getLogger(__name__)


class ModelFileError(ValueError):
    """Raised when a model file cannot be read or parsed."""


def _ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def bundled_model_names() -> list[str]:
    fixtures = resources.files("hmmfrag") / "fixtures"
    return sorted(p.name[: -len(".json")] for p in fixtures.iterdir() if p.name.endswith(".json"))


def load_bundled_model(name: str) -> Hmm:
    """Load one of the fitted models shipped with the package."""
    if not _SAFE_NAME_PATTERN.match(name) or name.startswith("."):
        raise ModelFileError(f"invalid bundled model name '{name}'")
    resource = resources.files("hmmfrag") / "fixtures" / f"{name}.json"
    if not resource.is_file():
        available = ", ".join(bundled_model_names())
        raise ModelFileError(f"unknown bundled model '{name}' (available: {available})")
    return Hmm.model_validate_json(resource.read_text())


def load_model(source: str | Path) -> Hmm:
    """Read a model from a JSON path or a ``bundled:<name>`` reference."""
    text = str(source)
    if text.startswith(BUNDLED_PREFIX):
        return load_bundled_model(text[len(BUNDLED_PREFIX):])
    path = Path(source)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ModelFileError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(payload, dict):
        raise ModelFileError(f"{path}: model JSON must be an object")
    return Hmm.model_validate(payload)


def save_model(model: Hmm, path: Path) -> None:
    """Write ``model`` as indented JSON; equal models give identical bytes."""
    _ensure_parent(path)
    path.write_text(model.model_dump_json(indent=2) + "\n")


def read_sequence(path: Path, alphabet_size: int | None = None) -> Sequence:
    """Read one base-10 symbol per line. Blank lines are skipped."""
    try:
        lines = path.read_text().splitlines()
    except FileNotFoundError as exc:
        raise SequenceError(f"{path}: file not found") from exc
    symbols: list[int] = []
    for number, line in enumerate(lines, start=1):
        token = line.strip()
        if not token:
            continue
        if not (token.isascii() and token.isdigit()):
            raise SequenceError(f"{path}:{number}: expected a non-negative integer, got '{token}'")
        symbol = int(token)
        if alphabet_size is not None and symbol >= alphabet_size:
            raise SequenceError(
                f"{path}:{number}: symbol {symbol} outside alphabet 0..{alphabet_size - 1}"
            )
        symbols.append(symbol)
    if not symbols:
        raise SequenceError(f"{path}: sequence file is empty")
    logger.debug("Read %d symbols from %s", len(symbols), path)
    return Sequence.from_symbols(np.asarray(symbols, dtype=np.int64), alphabet_size)


def write_sequence(y: Sequence, path: Path) -> None:
    _ensure_parent(path)
    path.write_text("".join(f"{s}\n" for s in y.symbols.tolist()))
