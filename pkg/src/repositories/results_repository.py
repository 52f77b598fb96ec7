"""Result files and externally supplied score matrices"""
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..core.exceptions import DataError, ParseError
from ..models.experiment import (
    CONDITIONAL_COLUMNS,
    RESULT_COLUMNS,
    ConditionalRecord,
    TrialRecord,
)
from ..models.score import ScoreMatrix
from .base import CsvRepository

logger = logging.getLogger(__name__)

_SCORE_COLUMN = re.compile(r"^s(\d+)$")
_CENTER_COLUMN = re.compile(r"^c(\d+)$")
_LINE_IN_PARSER_ERROR = re.compile(r"line (\d+)")


class ResultsRepository(CsvRepository[TrialRecord]):
    """method,trial,coverage,avg_size,wall_ms,alloc"""

    columns = RESULT_COLUMNS
    sort_keys = ("method", "trial")
    text_columns = ("method", "alloc")

    def __init__(self, path: Path):
        super().__init__(path, TrialRecord)


class ConditionalResultsRepository(CsvRepository[ConditionalRecord]):
    """method,trial,location,coverage,size"""

    columns = CONDITIONAL_COLUMNS
    sort_keys = ("method", "trial", "location")

    def __init__(self, path: Path):
        super().__init__(path, ConditionalRecord)


def write_results_csv(records: Iterable[TrialRecord], path: Path) -> Path:
    return ResultsRepository(path).write(records)


def read_results_csv(path: Path) -> List[TrialRecord]:
    return ResultsRepository(path).read()


@dataclass(frozen=True)
class IngestedScores:
    """A score matrix with the optional label and center columns of its file"""

    matrix: ScoreMatrix
    labels: Optional[np.ndarray] = None
    centers: Optional[np.ndarray] = None


def _numbered(columns, pattern: re.Pattern) -> List[Tuple[int, str]]:
    found = []
    for column in columns:
        match = pattern.match(column)
        if match:
            found.append((int(match.group(1)), column))
    return sorted(found)


def _numeric(frame: pd.DataFrame, columns: List[str], path: Path) -> np.ndarray:
    values = frame[columns].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad_rows, bad_cols = np.nonzero(~np.isfinite(values))
    if bad_rows.size:
        row, col = int(bad_rows[0]), int(bad_cols[0])
        cell = frame.iloc[row][columns[col]]
        raise ParseError(f"{path}: column {columns[col]} holds non-numeric value '{cell}'", line=row + 2)
    return values


def ingest_scores_csv(path: Path) -> IngestedScores:
    """Read a holdout score matrix.

    Header ``s1,...,sK`` with optional ``y`` (labels) and ``c1,...,cK``
    (point predictions centering each score's sets); one row per holdout point.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Score file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise ParseError(f"{path}: empty file", line=1) from e
    except pd.errors.ParserError as e:
        match = _LINE_IN_PARSER_ERROR.search(str(e))
        raise ParseError(f"{path}: ragged row", line=int(match.group(1)) if match else None) from e

    columns = [str(c).strip() for c in frame.columns]
    frame.columns = columns
    scores = _numbered(columns, _SCORE_COLUMN)
    if not scores:
        raise ParseError(f"{path}: missing header; expected columns s1,...,sK", line=1)
    if frame.empty:
        raise ParseError(f"{path}: no data rows", line=2)

    # Short rows leave NaN behind even with keep_default_na disabled
    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        raise ParseError(f"{path}: ragged row", line=int(np.argmax(short)) + 2)

    score_columns = [c for _, c in scores]
    matrix = ScoreMatrix(_numeric(frame, score_columns, path), tuple(score_columns))

    labels = _numeric(frame, ["y"], path)[:, 0] if "y" in columns else None

    centers = None
    center_columns = [c for _, c in _numbered(columns, _CENTER_COLUMN)]
    if center_columns:
        if len(center_columns) != len(score_columns):
            raise ParseError(
                f"{path}: {len(center_columns)} center columns for {len(score_columns)} scores", line=1
            )
        centers = _numeric(frame, center_columns, path)

    logger.info("📥 Loaded %d x %d score matrix from %s", matrix.n, matrix.K, path)
    return IngestedScores(matrix, labels, centers)
