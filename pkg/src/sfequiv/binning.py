"""Discretisation of numeric columns for tabulation-based metrics.

Two edge rules are provided: equal-count quantile edges (used by the
ratio-of-counts tabulations, derived from the original table and applied
identically to the compared table) and fixed-width edges (used to turn
numeric variables into attack keys, e.g. 5-year age bands).  Bin membership
is right-closed: value v falls in bin i iff edges[i-1] < v <= edges[i].
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .data_model import CATEGORICAL, MicroTable, Schema, VariableSpec, MISSING_CODE
from .errors import ConfigError, MissingBinning


@dataclass(frozen=True)
class BinRule:
    """Either a fixed bin width (anchored at ``origin``) or explicit edges."""

    width: float | None = None
    edges: tuple[float, ...] | None = None
    origin: float = 0.0

    def __post_init__(self):
        if (self.width is None) == (self.edges is None):
            raise ConfigError("binning rule needs exactly one of width/edges")
        if self.width is not None and self.width <= 0:
            raise ConfigError("bin width must be positive")
        if self.edges is not None:
            es = tuple(float(e) for e in self.edges)
            if list(es) != sorted(set(es)):
                raise ConfigError("bin edges must be strictly increasing")
            object.__setattr__(self, "edges", es)


def quantile_edges(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Interior edges of ``n_bins`` equal-count bins of the non-missing values."""
    if n_bins < 1:
        raise ConfigError("quantile bin count must be >= 1")
    vals = np.asarray(values, dtype=np.float64)
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        return np.empty(0)
    qs = np.quantile(vals, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    return np.unique(qs)


def width_edges(values: np.ndarray, width: float, origin: float = 0.0) -> np.ndarray:
    """Interior edges at multiples of ``width`` covering the observed range."""
    vals = np.asarray(values, dtype=np.float64)
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        return np.empty(0)
    lo = math.floor((vals.min() - origin) / width)
    hi = math.ceil((vals.max() - origin) / width)
    if hi <= lo + 1:
        return np.empty(0)
    return origin + width * np.arange(lo + 1, hi)


def resolve_edges(values: np.ndarray, rule: BinRule) -> np.ndarray:
    if rule.edges is not None:
        return np.asarray(rule.edges, dtype=np.float64)
    return width_edges(values, rule.width, rule.origin)


def assign_bins(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bin codes for each value; NaN maps to the missing code."""
    values = np.asarray(values, dtype=np.float64)
    codes = np.searchsorted(edges, values, side="left").astype(np.int64)
    codes[np.isnan(values)] = MISSING_CODE
    return codes


def bin_labels(edges: np.ndarray) -> tuple[str, ...]:
    if edges.size == 0:
        return ("all",)
    labels = [f"<={edges[0]:g}"]
    labels += [f"({a:g},{b:g}]" for a, b in zip(edges[:-1], edges[1:])]
    labels.append(f">{edges[-1]:g}")
    return tuple(labels)


def bin_table(table: MicroTable, edge_map: dict[str, np.ndarray]) -> MicroTable:
    """Copy of ``table`` with the named numeric variables turned categorical.

    ``edge_map`` gives the interior edges per variable (typically derived
    from the original table so both tables share the same bins).
    """
    if not edge_map:
        return table
    specs = []
    cols = []
    for spec, col in zip(table.schema.variables, table.columns):
        if spec.name in edge_map:
            if spec.is_categorical:
                raise MissingBinning(f"{spec.name} is already categorical")
            edges = np.asarray(edge_map[spec.name], dtype=np.float64)
            specs.append(VariableSpec(spec.name, CATEGORICAL, bin_labels(edges)))
            cols.append(assign_bins(col, edges))
        else:
            specs.append(spec)
            cols.append(col)
    return MicroTable(Schema(tuple(specs)), tuple(cols))
