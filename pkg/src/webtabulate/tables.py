"""Flat table model, row binding, and CSV / JSON-lines serialization.

Cells are text or ``None`` (the null marker).  Column names may repeat
within a table; duplicates are only disambiguated at serialization time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import NameMismatch, SinkError

__all__ = [
    "Table",
    "TableSet",
    "bind_tables",
    "merge_tablesets",
    "write_csv",
    "write_jsonlines",
    "dedupe_columns",
]

@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list[str | None]]

    def __post_init__(self):
        if not self.name:
            raise ValueError("table name must be non-empty")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"table {self.name!r}: row width {len(row)} != {len(self.columns)} columns"
                )

    @classmethod
    def from_keyed_rows(cls, name: str, keyed_rows: list[list[tuple[str, str | None]]]) -> "Table":
        """Build a table whose columns are the ordered union of row columns.

        Duplicate names within one row are kept distinct by occurrence
        rank, so two rows each carrying two ``url`` cells line up.
        """
        keys: list[tuple[str, int]] = []
        for row in keyed_rows:
            counts: dict[str, int] = {}
            for col, _ in row:
                occ = counts.get(col, 0) + 1
                counts[col] = occ
                if (col, occ) not in keys:
                    keys.append((col, occ))
        rows = []
        for row in keyed_rows:
            counts, by_key = {}, {}
            for col, value in row:
                occ = counts.get(col, 0) + 1
                counts[col] = occ
                by_key[(col, occ)] = value
            rows.append([by_key.get(key) for key in keys])
        return cls(name=name, columns=[col for col, _ in keys], rows=rows)

    def keyed_rows(self) -> list[list[tuple[str, str | None]]]:
        return [list(zip(self.columns, row)) for row in self.rows]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.columns))


@dataclass
class TableSet:
    """Ordered, name-keyed collection of tables; always holds "metadata"."""

    tables: dict[str, Table] = field(default_factory=dict)

    def __post_init__(self):
        if "metadata" not in self.tables:
            meta = Table("metadata", [], [])
            self.tables = {"metadata": meta, **self.tables}

    def __getitem__(self, name: str) -> Table:
        return self.tables[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tables

    def __iter__(self):
        return iter(self.tables.values())

    def names(self) -> list[str]:
        return list(self.tables)

    def add(self, table: Table) -> None:
        if table.name in self.tables:
            raise ValueError(f"duplicate table name: {table.name}")
        self.tables[table.name] = table


def bind_tables(a: Table, b: Table) -> Table:
    """Stack b's rows under a's, unioning columns and null-filling gaps."""
    if a.name != b.name:
        raise NameMismatch(f"cannot bind {a.name!r} with {b.name!r}")
    return Table.from_keyed_rows(a.name, a.keyed_rows() + b.keyed_rows())


def merge_tablesets(sets) -> TableSet:
    """Merge many tablesets: same-named tables are bound in input order."""
    merged = TableSet()
    for tset in sets:
        for table in tset:
            if table.name in merged:
                merged.tables[table.name] = bind_tables(merged[table.name], table)
            else:
                merged.tables[table.name] = Table(table.name, list(table.columns),
                                                  [list(r) for r in table.rows])
    return merged


def dedupe_columns(columns: list[str]) -> list[str]:
    """Disambiguate repeated column names by suffixing ".1", ".2", ..."""
    seen: dict[str, int] = {}
    out = []
    for col in columns:
        n = seen.get(col, 0)
        seen[col] = n + 1
        out.append(col if n == 0 else f"{col}.{n}")
    return out


def _csv_field(cell: str | None) -> str:
    if cell is None:
        return ""
    if any(ch in cell for ch in ',"\r\n'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def write_csv(table: Table, destination) -> None:
    """Write the table as CSV: CRLF terminators, minimal quoting with
    doubled inner quotes, deduplicated header names, nulls as empty
    fields, UTF-8 without BOM."""
    try:
        lines = [",".join(_csv_field(c) for c in dedupe_columns(table.columns))]
        for row in table.rows:
            lines.append(",".join(_csv_field(c) for c in row))
        destination.write(("\r\n".join(lines) + "\r\n").encode("utf-8"))
    except OSError as exc:
        raise SinkError(f"writing CSV for table {table.name!r} failed: {exc}") from exc


def write_jsonlines(table: Table, destination) -> None:
    """Write one JSON object per row; keys are deduplicated column names."""
    try:
        columns = dedupe_columns(table.columns)
        for row in table.rows:
            obj = dict(zip(columns, row))
            destination.write((json.dumps(obj, ensure_ascii=False) + "\n").encode("utf-8"))
    except OSError as exc:
        raise SinkError(f"writing JSON lines for table {table.name!r} failed: {exc}") from exc
