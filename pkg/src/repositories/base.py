"""Base repository persisting pydantic records as CSV rows"""
from enum import Enum
from pathlib import Path
from typing import Generic, Iterable, List, Tuple, Type, TypeVar

import pandas as pd
from pydantic import BaseModel, ValidationError

from ..core.exceptions import DataError, InvalidInputError, ParseError

RecordType = TypeVar("RecordType", bound=BaseModel)

FLOAT_FORMAT = "%.6g"


class CsvRepository(Generic[RecordType]):
    """Writes and re-reads one record type with a fixed column order.

    Rows are sorted by ``sort_keys`` before writing so output is
    byte-identical for identical record sets, whatever order they arrive in.
    """

    columns: Tuple[str, ...] = ()
    sort_keys: Tuple[str, ...] = ()
    text_columns: Tuple[str, ...] = ("method",)

    def __init__(self, path: Path, record_type: Type[RecordType]):
        self.path = Path(path)
        self.record_type = record_type

    def to_row(self, record: RecordType) -> dict:
        row = {}
        for column in self.columns:
            value = getattr(record, column)
            row[column] = value.value if isinstance(value, Enum) else value
        return row

    def to_frame(self, records: Iterable[RecordType]) -> pd.DataFrame:
        rows = [self.to_row(r) for r in records]
        if not rows:
            raise InvalidInputError("No records to write")
        frame = pd.DataFrame(rows, columns=list(self.columns))
        return frame.sort_values(list(self.sort_keys), kind="mergesort").reset_index(drop=True)

    def write(self, records: Iterable[RecordType]) -> Path:
        """Write records; returns the path written"""
        frame = self.to_frame(records)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(self.path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            raise DataError(f"Cannot write {self.path}: {e}") from e
        return self.path

    def read(self) -> List[RecordType]:
        """Re-read a file written by ``write``"""
        try:
            frame = pd.read_csv(
                self.path,
                keep_default_na=False,
                dtype={c: str for c in self.text_columns},
            )
        except FileNotFoundError as e:
            raise DataError(f"Results file not found: {self.path}") from e
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ParseError(f"{self.path}: {e}") from e

        missing = [c for c in self.columns if c not in frame.columns]
        if missing:
            raise ParseError(f"{self.path}: missing columns {', '.join(missing)}", line=1)

        records = []
        for i, row in enumerate(frame[list(self.columns)].to_dict("records")):
            try:
                records.append(self.record_type(**row))
            except ValidationError as e:
                # Header is line 1
                raise ParseError(f"{self.path}: invalid record ({e.error_count()} errors)", line=i + 2) from e
        return records
