"""Schema-typed columnar microdata tables.

Categorical cells are stored as int64 codes into a per-variable category
dictionary, with ``-1`` marking a missing cell.  Numeric cells are float64
with ``NaN`` marking a missing cell.  Missing values are first-class: they
are retained on load and participate in tabulations as a category of their
own.  Tables are immutable after construction and safe to share across
worker processes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import (
    ConfigError,
    DataError,
    DuplicateHeader,
    EmptyFile,
    EmptyTable,
    MalformedNumeric,
    MissingColumn,
    NotCategorical,
    UnknownCategory,
    UnknownVariable,
)

CATEGORICAL = "categorical"
NUMERIC = "numeric"

MISSING_CODE = -1


class _MissingType:
    """Singleton standing in for a missing cell in decoded output."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Missing"

    def __reduce__(self):
        return (_MissingType, ())


MISSING = _MissingType()


@dataclass(frozen=True)
class VariableSpec:
    """Declaration of one variable: its kind, categories and missing codes.

    ``infer_categories`` marks an open dictionary: unseen values extend the
    category list in first-seen order during loading instead of raising
    :class:`UnknownCategory`.  A closed categorical variable must declare at
    least one category.
    """

    name: str
    kind: str
    categories: tuple[str, ...] = ()
    missing_codes: frozenset[str] = frozenset()
    infer_categories: bool = False

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "missing_codes", frozenset(self.missing_codes))
        if not self.name:
            raise ConfigError("variable name must be non-empty")
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise ConfigError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == NUMERIC and self.categories:
            raise ConfigError(f"{self.name}: numeric variable cannot declare categories")
        if self.kind == CATEGORICAL:
            if len(set(self.categories)) != len(self.categories):
                raise ConfigError(f"{self.name}: duplicate category labels")
            if not self.categories and not self.infer_categories:
                raise ConfigError(f"{self.name}: categorical variable needs at least one category")

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    @property
    def n_categories(self) -> int:
        return len(self.categories)


@dataclass(frozen=True)
class Schema:
    """Ordered collection of variable declarations."""

    variables: tuple[VariableSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(self.variables) < 2:
            raise ConfigError("a schema needs at least 2 variables")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate variable names in schema")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise UnknownVariable(f"unknown variable {name!r}")

    def var(self, name: str) -> VariableSpec:
        return self.variables[self.index(name)]

    def __contains__(self, name: str) -> bool:
        return any(v.name == name for v in self.variables)


@dataclass(frozen=True)
class MicroTable:
    """Immutable columnar dataset conforming to a :class:`Schema`."""

    schema: Schema
    columns: tuple[np.ndarray, ...]

    def __post_init__(self):
        cols = []
        if len(self.columns) != len(self.schema.variables):
            raise DataError("column count does not match schema")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise DataError("columns have differing lengths")
        for spec, col in zip(self.schema.variables, self.columns):
            if spec.is_categorical:
                arr = np.asarray(col, dtype=np.int64)
                if arr.size and (arr.min() < MISSING_CODE or arr.max() >= spec.n_categories):
                    raise DataError(f"{spec.name}: category code out of range")
            else:
                arr = np.asarray(col, dtype=np.float64)
                if arr.size and np.isinf(arr).any():
                    raise DataError(f"{spec.name}: non-finite numeric cell")
            arr.setflags(write=False)
            cols.append(arr)
        object.__setattr__(self, "columns", tuple(cols))

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.schema.index(name)]

    def take(self, indices: np.ndarray) -> "MicroTable":
        """Row subset/reordering; indices may repeat."""
        return MicroTable(self.schema, tuple(c[indices] for c in self.columns))

    def with_schema(self, schema: Schema) -> "MicroTable":
        """Rebind to a compatible schema (e.g. one with extended categories)."""
        return MicroTable(schema, self.columns)

    def decoded_column(self, name: str) -> list:
        """Column as labels / floats, with the MISSING sentinel for gaps."""
        spec = self.schema.var(name)
        col = self.column(name)
        if spec.is_categorical:
            return [MISSING if c == MISSING_CODE else spec.categories[c] for c in col]
        return [MISSING if np.isnan(v) else float(v) for v in col]


def _parse_header(path: Path) -> tuple[list[str], "csv.reader"]:
    fh = open(path, "r", encoding="utf-8", newline="")
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise EmptyFile(f"{path}: no header row")
    return [h.strip() for h in header], reader


def load_csv(path, schema: Schema) -> MicroTable:
    """Read a CSV file with a header row into a validated MicroTable.

    Header order is irrelevant; columns not named in the schema are ignored.
    Cells equal to a declared missing code (or the empty string, always) map
    to Missing.  Unseen categorical values raise :class:`UnknownCategory`
    unless the variable was declared with ``infer_categories``, in which case
    the returned table's schema carries the extended category list.
    """
    path = Path(path)
    header, reader = _parse_header(path)
    if len(set(header)) != len(header):
        raise DuplicateHeader(f"{path}: duplicate column in header")
    col_idx = {}
    for spec in schema.variables:
        if spec.name not in header:
            raise MissingColumn(f"{path}: column {spec.name!r} not found")
        col_idx[spec.name] = header.index(spec.name)

    lookups = {s.name: {c: i for i, c in enumerate(s.categories)} for s in schema.variables}
    extra: dict[str, list[str]] = {s.name: [] for s in schema.variables}
    raw_cols: dict[str, list] = {s.name: [] for s in schema.variables}

    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) < len(header):
            raise DataError(f"{path}:{row_no}: expected {len(header)} cells, got {len(row)}")
        for spec in schema.variables:
            raw = row[col_idx[spec.name]].strip()
            if raw == "" or raw in spec.missing_codes:
                raw_cols[spec.name].append(MISSING_CODE if spec.is_categorical else np.nan)
                continue
            if spec.is_categorical:
                code = lookups[spec.name].get(raw)
                if code is None:
                    if not spec.infer_categories:
                        raise UnknownCategory(
                            f"{path}:{row_no}: {raw!r} is not a category of {spec.name}")
                    code = len(lookups[spec.name])
                    lookups[spec.name][raw] = code
                    extra[spec.name].append(raw)
                raw_cols[spec.name].append(code)
            else:
                try:
                    value = float(raw)
                except ValueError:
                    raise MalformedNumeric(f"{path}:{row_no}: {raw!r} in {spec.name}") from None
                if not np.isfinite(value):
                    raise MalformedNumeric(f"{path}:{row_no}: non-finite {raw!r} in {spec.name}")
                raw_cols[spec.name].append(value)

    out_schema = schema
    if any(extra.values()):
        out_schema = Schema(tuple(
            replace(s, categories=s.categories + tuple(extra[s.name]))
            for s in schema.variables))
    cols = []
    for spec in out_schema.variables:
        dtype = np.int64 if spec.is_categorical else np.float64
        cols.append(np.asarray(raw_cols[spec.name], dtype=dtype))
    return MicroTable(out_schema, tuple(cols))


def write_csv(table: MicroTable, path) -> None:
    """Write a table back to CSV; round-trips cell values exactly.

    Missing cells are written as the variable's alphabetically first missing
    code, or as an empty cell if none is declared (the loader always reads
    empty cells as Missing).  Numeric cells use ``repr`` so reloading gives
    the identical float.
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.schema.names)
        decoded = []
        for spec, col in zip(table.schema.variables, table.columns):
            miss = sorted(spec.missing_codes)[0] if spec.missing_codes else ""
            if spec.is_categorical:
                decoded.append([miss if c == MISSING_CODE else spec.categories[c] for c in col])
            else:
                decoded.append([miss if np.isnan(v) else repr(float(v)) for v in col])
        for r in range(table.n_rows):
            writer.writerow([decoded[c][r] for c in range(len(decoded))])


def infer_schema(path, numeric_hint=(), missing_codes=()) -> Schema:
    """Derive a schema from a CSV: every column categorical unless hinted.

    Categories are collected in first-seen order.  ``missing_codes`` apply to
    every variable; the empty string is always treated as missing.
    """
    path = Path(path)
    numeric_hint = set(numeric_hint)
    missing = frozenset(missing_codes)
    header, reader = _parse_header(path)
    if len(set(header)) != len(header):
        raise DuplicateHeader(f"{path}: duplicate column in header")

    seen: dict[str, dict] = {h: {} for h in header}
    n_rows = 0
    for row in reader:
        if not row:
            continue
        n_rows += 1
        for name, raw in zip(header, row):
            raw = raw.strip()
            if name in numeric_hint or raw == "" or raw in missing:
                continue
            seen[name].setdefault(raw, None)
    if n_rows == 0:
        raise EmptyFile(f"{path}: no data rows to infer categories from")

    specs = []
    for name in header:
        if name in numeric_hint:
            specs.append(VariableSpec(name, NUMERIC, missing_codes=missing))
        else:
            cats = tuple(seen[name])
            if not cats:
                raise DataError(f"{path}: column {name!r} has no non-missing values")
            specs.append(VariableSpec(name, CATEGORICAL, cats, missing_codes=missing))
    return Schema(tuple(specs))


def category_counts(table: MicroTable, name: str) -> np.ndarray:
    """Counts per category with index 0 = Missing, index c+1 = category c."""
    spec = table.schema.var(name)
    if not spec.is_categorical:
        raise NotCategorical(f"{name} is not categorical")
    codes = table.column(name)
    return np.bincount(codes + 1, minlength=spec.n_categories + 1)


def column_proportions(table: MicroTable, name: str, include_missing: bool = False) -> dict:
    """Per-category proportions of one categorical column.

    All schema categories appear (with 0.0 where absent); when
    ``include_missing`` is set, Missing is an additional key and the
    denominator is the full row count, otherwise missing cells are excluded.
    """
    counts = category_counts(table, name)
    spec = table.schema.var(name)
    total = counts.sum() if include_missing else counts[1:].sum()
    if total == 0:
        raise EmptyTable(f"{name}: no cells to tabulate")
    out = {}
    if include_missing:
        out[MISSING] = counts[0] / total
    for i, label in enumerate(spec.categories):
        out[label] = counts[i + 1] / total
    return out


# -- schema files ------------------------------------------------------------

def read_schema(path) -> Schema:
    """Load a schema declaration from a YAML document."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise DataError(f"schema file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(doc, dict) or "variables" not in doc:
        raise ConfigError(f"{path}: expected a mapping with a 'variables' list")
    specs = []
    for entry in doc["variables"]:
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise ConfigError(f"{path}: each variable needs 'name' and 'kind'")
        specs.append(VariableSpec(
            name=str(entry["name"]),
            kind=str(entry["kind"]),
            categories=tuple(str(c) for c in entry.get("categories", ())),
            missing_codes=frozenset(str(m) for m in entry.get("missing_codes", ())),
            infer_categories=bool(entry.get("infer_categories", False)),
        ))
    return Schema(tuple(specs))


def write_schema(schema: Schema, path) -> None:
    doc = {"variables": []}
    for s in schema.variables:
        entry: dict = {"name": s.name, "kind": s.kind}
        if s.is_categorical:
            entry["categories"] = list(s.categories)
        if s.missing_codes:
            entry["missing_codes"] = sorted(s.missing_codes)
        if s.infer_categories:
            entry["infer_categories"] = True
        doc["variables"].append(entry)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
