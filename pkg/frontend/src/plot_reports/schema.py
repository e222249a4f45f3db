"""Reader for the schema-tagged CSVs the science package emits.

The contract is purely textual: the first line is ``#schema=<name>``, an
optional second line is ``#meta <json>``, then a header row and float
data rows.  This package never imports the producer; the files are the
interface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["SchemaError", "EmptyTableError", "SchemaTable", "read_table"]


class SchemaError(ValueError):
    """A consumed CSV does not follow the documented schema contract."""


class EmptyTableError(SchemaError):
    """A consumed CSV carries a valid schema line but no data rows."""


@dataclass(frozen=True)
class SchemaTable:
    """One parsed CSV: schema name, meta dictionary, columns, float rows."""

    path: Path
    schema: str
    meta: dict
    columns: tuple[str, ...]
    rows: np.ndarray

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise SchemaError(
                f"{self.path}: schema {self.schema} is missing column "
                f"{name!r} (have {', '.join(self.columns)})")
        return self.rows[:, self.columns.index(name)]

    def require(self, schema: str, *columns: str) -> "SchemaTable":
        if self.schema != schema:
            raise SchemaError(
                f"{self.path}: expected schema {schema}, found {self.schema}")
        for name in columns:
            self.column(name)
        return self


def read_table(path) -> SchemaTable:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#schema="):
        raise SchemaError(
            f"{path}: first line must be '#schema=<name>', found "
            f"{lines[0][:40]!r}" if lines else f"{path}: file is empty")
    schema = lines[0][len("#schema="):].strip()
    if not schema:
        raise SchemaError(f"{path}: empty schema name")
    cursor = 1
    meta: dict = {}
    if cursor < len(lines) and lines[cursor].startswith("#meta"):
        try:
            meta = json.loads(lines[cursor][len("#meta"):])
        except json.JSONDecodeError as err:
            raise SchemaError(f"{path}: malformed #meta line: {err}") from err
        cursor += 1
    if cursor >= len(lines) or not lines[cursor].strip():
        raise SchemaError(f"{path}: missing header row")
    columns = tuple(part.strip() for part in lines[cursor].split(","))
    cursor += 1
    body = [ln for ln in lines[cursor:] if ln.strip()]
    if not body:
        raise EmptyTableError(
            f"{path}: schema {schema} has a header but no data rows — "
            f"nothing to plot")
    rows = np.empty((len(body), len(columns)), dtype=float)
    for i, ln in enumerate(body):
        parts = ln.split(",")
        if len(parts) != len(columns):
            raise SchemaError(
                f"{path}: row {i + 1} has {len(parts)} cells, header has "
                f"{len(columns)}")
        try:
            rows[i] = [float(p) for p in parts]
        except ValueError as err:
            raise SchemaError(f"{path}: row {i + 1}: {err}") from err
    return SchemaTable(path=path, schema=schema, meta=meta,
                       columns=columns, rows=rows)
