"""Tabular dataset ingestion, schema inference, and prompt-ready description.

A Dataset keeps full cell values locally (they are injected into the
rendered visualization as the global data table) while only the schema
summary produced by :func:`describe_dataset` ever reaches a model.
"""

from __future__ import annotations

import ast
import csv
import io
import json
import re
import uuid
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Iterable, Sequence

from .errors import EmptyDataset, MalformedCsv, TransformError

# Cell values treated as null during inference (case-insensitive).
NULL_SENTINELS = {"", "na", "nan", "null"}

# Distinct nominal/ordinal values kept on the attribute and shown in
# descriptions before "… (N distinct)" truncation.
NOMINAL_VALUE_CAP = 20

# Minimum run length for prefix{a-b} attribute abbreviation.
ABBREVIATION_MIN_RUN = 3

_ISO_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}([ T].+)?$")


class AttributeKind(str, Enum):
    QUANTITATIVE = "quantitative"
    TEMPORAL = "temporal"
    NOMINAL = "nominal"
    ORDINAL = "ordinal"


# Kind names used in abbreviated attribute lines, e.g. "sensor{1-200}: float".
_SHORT_KIND = {
    AttributeKind.QUANTITATIVE: "float",
    AttributeKind.TEMPORAL: "datetime",
    AttributeKind.NOMINAL: "string",
    AttributeKind.ORDINAL: "ordinal",
}


@dataclass(frozen=True)
class Attribute:
    """Schema entry for one column.

    value_range is a (min, max) pair for quantitative/temporal columns and
    a sorted, capped distinct-value list for nominal/ordinal columns (the
    full distinct count is kept separately in distinct_count).
    """

    name: str
    kind: AttributeKind
    value_range: tuple
    nullable: bool
    distinct_count: int | None = None

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "valueRange": list(self.value_range),
            "nullable": self.nullable,
            "distinctCount": self.distinct_count,
        }

    @staticmethod
    def from_doc(doc: dict) -> "Attribute":
        return Attribute(
            name=doc["name"],
            kind=AttributeKind(doc["kind"]),
            value_range=tuple(doc["valueRange"]),
            nullable=doc["nullable"],
            distinct_count=doc.get("distinctCount"),
        )


@dataclass(frozen=True)
class Dataset:
    """Immutable ingested table. Safe to share across request handlers."""

    id: str
    name: str
    attributes: tuple[Attribute, ...]
    rows: tuple[dict, ...]
    source_description: str | None = None

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def attribute(self, name: str) -> Attribute:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        raise KeyError(name)

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "sourceDescription": self.source_description,
            "attributes": [a.to_doc() for a in self.attributes],
            "rows": [dict(r) for r in self.rows],
        }

    @staticmethod
    def from_doc(doc: dict) -> "Dataset":
        return Dataset(
            id=doc["id"],
            name=doc["name"],
            source_description=doc.get("sourceDescription"),
            attributes=tuple(Attribute.from_doc(a) for a in doc["attributes"]),
            rows=tuple(doc["rows"]),
        )


@dataclass(frozen=True)
class MappingSpec:
    """Per-value transform for one attribute.

    transform is a Python expression over the single free variable ``value``
    (e.g. ``value.replace("/", "-")``); it must not reference other columns.
    """

    attribute: str
    transform: str


def is_null_token(value: Any) -> bool:
    if value is None:
        return True
    return isinstance(value, str) and value.strip().lower() in NULL_SENTINELS


def parse_temporal(value: Any) -> datetime | None:
    """Parse ISO-8601 date/datetime strings; None when the value is not one."""
    if isinstance(value, datetime):
        return value
    if not isinstance(value, str):
        return None
    text = value.strip()
    if not _ISO_DATE_RE.match(text):
        return None
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        return None


def parse_quantitative(value: Any) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        return None
    try:
        return float(value.strip())
    except ValueError:
        return None


def conforms(value: Any, kind: AttributeKind) -> bool:
    """True when a non-null cell satisfies its attribute kind parser."""
    if kind == AttributeKind.TEMPORAL:
        return parse_temporal(value) is not None
    if kind == AttributeKind.QUANTITATIVE:
        return parse_quantitative(value) is not None
    return True  # nominal/ordinal accept any value


def _convert_cell(value: Any, kind: AttributeKind) -> Any:
    """Typed cell for the stored row: numbers for quantitative, strings otherwise."""
    if is_null_token(value):
        return None
    if kind == AttributeKind.QUANTITATIVE:
        number = parse_quantitative(value)
        if number is not None and number.is_integer() and abs(number) < 1e15:
            return int(number)
        return number
    if isinstance(value, str):
        return value.strip()
    return value


def _temporal_display(raw: str, parsed: datetime) -> str:
    # Date-only inputs stay date-only in ranges and descriptions.
    if len(raw.strip()) == 10:
        return parsed.date().isoformat()
    return parsed.isoformat(sep=" " if " " in raw else "T")


def infer_column(
    values: Sequence[Any], user_ordinal: bool = False
) -> tuple[AttributeKind, tuple, bool]:
    """Infer (kind, value_range, nullable) for one column of raw values.

    Kind precedence is temporal > quantitative > ordinal > nominal, each
    decided by a full-column parse test over non-null cells. Ordinal is
    only produced when the caller declared the column ordinal; inference
    itself never picks it. Columns with no non-null cells fall back to
    nominal with an empty value list.
    """
    non_null = [v for v in values if not is_null_token(v)]
    nullable = len(non_null) < len(values)

    if not non_null:
        return AttributeKind.NOMINAL, (), True

    parsed_dates = [parse_temporal(v) for v in non_null]
    if all(d is not None for d in parsed_dates):
        pairs = sorted(zip(parsed_dates, non_null))
        low = _temporal_display(str(pairs[0][1]), pairs[0][0])
        high = _temporal_display(str(pairs[-1][1]), pairs[-1][0])
        return AttributeKind.TEMPORAL, (low, high), nullable

    parsed_numbers = [parse_quantitative(v) for v in non_null]
    if all(n is not None for n in parsed_numbers):
        return AttributeKind.QUANTITATIVE, (min(parsed_numbers), max(parsed_numbers)), nullable

    kind = AttributeKind.ORDINAL if user_ordinal else AttributeKind.NOMINAL
    distinct = sorted({str(v).strip() for v in non_null})
    return kind, tuple(distinct[:NOMINAL_VALUE_CAP]), nullable


def infer_schema(
    rows: Sequence[dict], ordinal_hints: Iterable[str] = ()
) -> list[Attribute]:
    """Infer one Attribute per column of the given records.

    ordinal_hints names columns the user declared ordinal; those get kind
    ordinal when their values do not parse as temporal or quantitative.
    """
    if not rows:
        raise EmptyDataset("cannot infer a schema from zero rows")
    hints = set(ordinal_hints)
    attributes = []
    for name in rows[0].keys():
        column = [row.get(name) for row in rows]
        kind, value_range, nullable = infer_column(column, user_ordinal=name in hints)
        distinct = None
        if kind in (AttributeKind.NOMINAL, AttributeKind.ORDINAL):
            distinct = len({str(v).strip() for v in column if not is_null_token(v)})
        attributes.append(
            Attribute(
                name=name,
                kind=kind,
                value_range=value_range,
                nullable=nullable,
                distinct_count=distinct,
            )
        )
    return attributes


def _read_csv_rows(text: str) -> tuple[list[str], list[list[str]]]:
    # An RFC 4180 file has an even number of quote characters (two per quoted
    # field plus two per escaped quote); an odd count means an unbalanced quote.
    if text.count('"') % 2 == 1:
        raise MalformedCsv("unbalanced quote in CSV input")
    try:
        reader = csv.reader(io.StringIO(text), strict=True)
        records = [row for row in reader]
    except csv.Error as exc:
        raise MalformedCsv(f"CSV parse error: {exc}") from exc
    records = [row for row in records if row]  # drop fully empty lines
    if not records:
        raise MalformedCsv("missing header row")
    header, data = records[0], records[1:]
    header = [h.strip().lstrip("﻿") for h in header]
    if any(not h for h in header):
        raise MalformedCsv("header contains an empty column name")
    if len(set(header)) != len(header):
        raise MalformedCsv("duplicate column names in header")
    for index, row in enumerate(data):
        if len(row) > len(header):
            raise MalformedCsv(
                f"row {index + 1} has {len(row)} fields, header has {len(header)}"
            )
    return header, data


def ingest_csv(
    data: bytes,
    name: str,
    source_description: str | None = None,
    ordinal_hints: Iterable[str] = (),
    dataset_id: str | None = None,
) -> Dataset:
    """Ingest a UTF-8, header-rowed CSV byte stream into a Dataset.

    Rows shorter than the header are padded with nulls; rows longer than
    the header raise MalformedCsv. Cell values are converted per the
    inferred schema (numbers for quantitative columns, trimmed strings
    otherwise, None for null sentinels).
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedCsv("input is not valid UTF-8") from exc
    header, records = _read_csv_rows(text)
    if not records:
        raise EmptyDataset("CSV has a header row but no data rows")
    raw_rows = []
    for record in records:
        padded = list(record) + [""] * (len(header) - len(record))
        raw_rows.append(dict(zip(header, padded)))
    attributes = infer_schema(raw_rows, ordinal_hints=ordinal_hints)
    rows = tuple(
        {attr.name: _convert_cell(row[attr.name], attr.kind) for attr in attributes}
        for row in raw_rows
    )
    return Dataset(
        id=dataset_id or uuid.uuid4().hex,
        name=name,
        attributes=tuple(attributes),
        rows=rows,
        source_description=source_description,
    )


def format_value(value: Any) -> str:
    """Deterministic plain rendering used in descriptions and descriptors."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    if isinstance(value, datetime):
        return value.isoformat()
    return str(value)


def _split_numeric_suffix(name: str) -> tuple[str, int] | None:
    match = re.match(r"^(.*?)(\d+)$", name)
    if not match:
        return None
    prefix, digits = match.group(1), match.group(2)
    # Zero-padded suffixes cannot round-trip through "{a-b}" expansion.
    if str(int(digits)) != digits:
        return None
    return prefix, int(digits)


def _abbreviation_runs(attributes: Sequence[Attribute]) -> list[tuple[int, int]]:
    """Maximal runs [start, end) of ≥3 consecutive attributes whose names are
    a shared prefix plus consecutive integers and whose kinds match."""
    runs = []
    i = 0
    while i < len(attributes):
        parts = _split_numeric_suffix(attributes[i].name)
        if parts is None:
            i += 1
            continue
        prefix, number = parts
        j = i + 1
        expected = number + 1
        while j < len(attributes):
            nxt = _split_numeric_suffix(attributes[j].name)
            if (
                nxt is None
                or nxt[0] != prefix
                or nxt[1] != expected
                or attributes[j].kind != attributes[i].kind
            ):
                break
            expected += 1
            j += 1
        if j - i >= ABBREVIATION_MIN_RUN:
            runs.append((i, j))
            i = j
        else:
            i += 1
    return runs


def expand_abbreviation(abbreviated: str) -> list[str]:
    """Expand "prefix{a-b}" back into the exact attribute names it covers."""
    match = re.match(r"^(.*)\{(\d+)-(\d+)\}$", abbreviated)
    if not match:
        return [abbreviated]
    prefix, low, high = match.group(1), int(match.group(2)), int(match.group(3))
    return [f"{prefix}{k}" for k in range(low, high + 1)]


def _attribute_line(attr: Attribute) -> str:
    nullability = "nullable" if attr.nullable else "non-null"
    if attr.kind in (AttributeKind.QUANTITATIVE, AttributeKind.TEMPORAL):
        if attr.value_range:
            low, high = attr.value_range
            span = f"range [{format_value(low)}, {format_value(high)}]"
        else:
            span = "range unknown"
        return f"- {attr.name}: {attr.kind.value}, {span}, {nullability}"
    values = ", ".join(str(v) for v in attr.value_range)
    total = attr.distinct_count if attr.distinct_count is not None else len(attr.value_range)
    if total > len(attr.value_range):
        values = f"{values}, …" if values else "…"
    return (
        f"- {attr.name}: {attr.kind.value}, values [{values}] "
        f"({total} distinct), {nullability}"
    )


def describe_dataset(dataset: Dataset) -> str:
    """Prompt-ready schema summary: name, row count, source text, and one
    line per attribute (runs of similar columns collapse to prefix{a-b})."""
    lines = [f"Dataset: {dataset.name}", f"Rows: {dataset.row_count}"]
    if dataset.source_description:
        lines.append(f"Source: {dataset.source_description}")
    lines.append("Attributes:")
    runs = _abbreviation_runs(dataset.attributes)
    run_starts = {start: end for start, end in runs}
    covered = {k for start, end in runs for k in range(start, end)}
    for index, attr in enumerate(dataset.attributes):
        if index in run_starts:
            end = run_starts[index]
            prefix, first = _split_numeric_suffix(attr.name)
            _, last = _split_numeric_suffix(dataset.attributes[end - 1].name)
            lines.append(f"- {prefix}{{{first}-{last}}}: {_SHORT_KIND[attr.kind]}")
        elif index not in covered:
            lines.append(_attribute_line(attr))
    return "\n".join(lines)


# Names usable inside mapping transform expressions, besides ``value``.
_TRANSFORM_GLOBALS = {
    "abs": abs,
    "min": min,
    "max": max,
    "round": round,
    "len": len,
    "str": str,
    "int": int,
    "float": float,
}


def _compile_transform(spec: MappingSpec) -> Callable[[Any], Any]:
    try:
        tree = ast.parse(spec.transform, mode="eval")
    except SyntaxError as exc:
        raise TransformError(
            f"transform for {spec.attribute!r} does not compile: {exc}", row_index=-1
        ) from exc
    bound = {"value"} | set(_TRANSFORM_GLOBALS)
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and isinstance(node.ctx, ast.Store):
            bound.add(node.id)
        elif isinstance(node, ast.Lambda):
            bound.update(a.arg for a in node.args.args)
    for node in ast.walk(tree):
        if (
            isinstance(node, ast.Name)
            and isinstance(node.ctx, ast.Load)
            and node.id not in bound
        ):
            raise TransformError(
                f"transform for {spec.attribute!r} references {node.id!r}; "
                "only the current value (as `value`) and basic builtins are allowed",
                row_index=-1,
            )
        if isinstance(node, ast.Attribute) and node.attr.startswith("__"):
            raise TransformError(
                f"transform for {spec.attribute!r} uses a dunder attribute",
                row_index=-1,
            )
    code = compile(tree, f"<mapping:{spec.attribute}>", "eval")
    def apply(value: Any) -> Any:
        return eval(code, {"__builtins__": {}, **_TRANSFORM_GLOBALS}, {"value": value})
    return apply


def apply_mappings(dataset: Dataset, specs: Sequence[MappingSpec]) -> Dataset:
    """Return a new Dataset with the transforms applied per value.

    Schema is re-inferred for the affected columns; a transform that fails
    on any cell raises TransformError naming the row index.
    """
    for spec in specs:
        if spec.attribute not in {a.name for a in dataset.attributes}:
            raise TransformError(
                f"mapping names unknown attribute {spec.attribute!r}", row_index=-1
            )
    new_rows = [dict(row) for row in dataset.rows]
    touched = set()
    for spec in specs:
        transform = _compile_transform(spec)
        touched.add(spec.attribute)
        for index, row in enumerate(new_rows):
            try:
                row[spec.attribute] = transform(row[spec.attribute])
            except Exception as exc:
                raise TransformError(
                    f"transform for {spec.attribute!r} failed on row {index}: {exc}",
                    row_index=index,
                ) from exc
    attributes = []
    for attr in dataset.attributes:
        if attr.name not in touched:
            attributes.append(attr)
            continue
        column = [row[attr.name] for row in new_rows]
        kind, value_range, nullable = infer_column(
            column, user_ordinal=attr.kind == AttributeKind.ORDINAL
        )
        distinct = None
        if kind in (AttributeKind.NOMINAL, AttributeKind.ORDINAL):
            distinct = len({str(v).strip() for v in column if not is_null_token(v)})
        attributes.append(
            Attribute(attr.name, kind, value_range, nullable, distinct_count=distinct)
        )
        for row in new_rows:
            row[attr.name] = _convert_cell(row[attr.name], kind)
    return Dataset(
        id=dataset.id,
        name=dataset.name,
        attributes=tuple(attributes),
        rows=tuple(new_rows),
        source_description=dataset.source_description,
    )


def dataset_json(dataset: Dataset) -> str:
    """The stored serialization, also injected as the visualization's data table."""
    return json.dumps(dataset.to_doc(), ensure_ascii=False)
