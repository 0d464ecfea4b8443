"""
PrettyTable helpers for result tables.

Results are written as tab-separated text with a ``# key: value`` header
carrying the resolved experiment settings.  The same tables render on the
console for the ``validate`` report.
"""
from __future__ import annotations

import dataclasses
import io
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import prettytable

FLOAT_FORMAT = ".10g"


def string_for_table(value: Any) -> str:
    """Fix the value for display in the table."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, FLOAT_FORMAT)
    if hasattr(value, "label"):
        return value.label
    return str(value)


def _as_mapping(row: Any) -> Mapping[str, Any]:
    if dataclasses.is_dataclass(row):
        return dataclasses.asdict(row)
    return row


def table_from_rows(
    rows: Iterable[Any],
    columns: Optional[Sequence[str]] = None,
) -> prettytable.PrettyTable:
    """
    Create a PrettyTable from dataclass instances or mappings.

    Parameters
    ----------
    rows : iterable
        Dataclass instances or dictionaries.
    columns : sequence of str, optional
        Columns to include, in order.  Defaults to the keys of the first row.
    """
    rows = [_as_mapping(row) for row in rows]
    if columns is None:
        if not rows:
            raise ValueError("Cannot infer columns of an empty table")
        columns = list(rows[0])
    table = prettytable.PrettyTable()
    table.field_names = list(columns)
    for row in rows:
        table.add_row([string_for_table(row.get(key)) for key in columns])
    return table


def flatten_mapping(data: Mapping[str, Any], prefix: str = "") -> dict:
    """Flatten nested mappings to dotted keys."""
    flat = {}
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten_mapping(value, prefix=f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def provenance_header(settings: Mapping[str, Any]) -> str:
    """Render nested settings as ``# dotted.key: value`` comment lines."""
    lines = []
    for key, value in flatten_mapping(settings).items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(string_for_table(item) for item in value)
        else:
            value = string_for_table(value)
        lines.append(f"# {key}: {value}")
    return "".join(f"{line}\n" for line in lines)


def get_tsv_string(table: prettytable.PrettyTable) -> str:
    return table.get_csv_string(delimiter="\t", lineterminator="\n")


def write_tsv(
    table: prettytable.PrettyTable,
    path: str | Path,
    settings: Optional[Mapping[str, Any]] = None,
) -> Path:
    """
    Write ``table`` as tab-separated values with an optional header.

    Returns
    -------
    path : Path
        The file written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = provenance_header(settings) if settings else ""
    with open(path, "w", newline="") as fp:
        fp.write(header)
        fp.write(get_tsv_string(table))
    return path


def read_tsv(path: str | Path) -> tuple[dict[str, str], prettytable.PrettyTable]:
    """
    Read a table written by :func:`write_tsv`.

    Returns
    -------
    header : dict
        The ``# key: value`` lines, values left as strings.
    table : prettytable.PrettyTable
        The table body, all cells as strings.
    """
    header = {}
    body = io.StringIO()
    with open(path) as fp:
        for line in fp:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                header[key.strip()] = value.strip()
            else:
                body.write(line)
    body.seek(0)
    table = prettytable.from_csv(body, delimiter="\t")
    return header, table
