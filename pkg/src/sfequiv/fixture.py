"""Bundled toy-population generator.

Real census extracts cannot ship with the repository, so tests and demos run
on a latent-class mixture population: each row first draws a hidden class,
then every variable independently given the class, with class-specific
category weights (categorical) or class-shifted means (numeric).  The
``dependence`` knob in [0, 1] interpolates between identical class
distributions (variables mutually independent) and strongly class-peaked
ones (strong pairwise association between all variables).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data_model import (
    CATEGORICAL,
    NUMERIC,
    MISSING_CODE,
    MicroTable,
    Schema,
    VariableSpec,
    write_csv,
    write_schema,
)
from .errors import ConfigError, NotCategorical

_PEAK_MASS = 0.9


@dataclass(frozen=True)
class PopulationSpec:
    # census-like defaults: c1 plays an area code, c2 a detailed status, the
    # rest coarser demographics; high-entropy leading variables keep small
    # key sets identifying, as in real attack configurations
    rows: int = 10_000
    cardinalities: tuple[int, ...] = (30, 12, 8, 6, 5, 4, 3, 2)
    numeric_vars: int = 2
    classes: int = 4
    dependence: float = 0.9
    missing_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cardinalities", tuple(int(c) for c in self.cardinalities))
        if self.rows < 1:
            raise ConfigError("rows must be >= 1")
        if any(c < 2 for c in self.cardinalities):
            raise ConfigError("every categorical variable needs >= 2 categories")
        if len(self.cardinalities) + self.numeric_vars < 2:
            raise ConfigError("population needs at least 2 variables")
        if self.classes < 1:
            raise ConfigError("classes must be >= 1")
        if not (0.0 <= self.dependence <= 1.0):
            raise ConfigError("dependence must lie in [0, 1]")
        if not (0.0 <= self.missing_rate < 1.0):
            raise ConfigError("missing rate must lie in [0, 1)")

    @property
    def categorical_names(self) -> tuple[str, ...]:
        return tuple(f"c{i + 1}" for i in range(len(self.cardinalities)))

    @property
    def numeric_names(self) -> tuple[str, ...]:
        return tuple(f"n{i + 1}" for i in range(self.numeric_vars))


def population_schema(spec: PopulationSpec) -> Schema:
    variables = [
        VariableSpec(name, CATEGORICAL, tuple(f"L{j}" for j in range(card)),
                     missing_codes=frozenset({"NA"}))
        for name, card in zip(spec.categorical_names, spec.cardinalities)
    ]
    variables += [VariableSpec(name, NUMERIC, missing_codes=frozenset({"NA"}))
                  for name in spec.numeric_names]
    return Schema(tuple(variables))


def generate_population(spec: PopulationSpec, seed: int) -> MicroTable:
    rng = np.random.default_rng(seed)
    n, d = spec.rows, spec.dependence
    weights = rng.dirichlet(np.full(spec.classes, 8.0))
    z = rng.choice(spec.classes, size=n, p=weights)

    cols = []
    for v, card in enumerate(spec.cardinalities):
        base = rng.dirichlet(np.full(card, 5.0))
        peaks = rng.integers(0, card, size=spec.classes)
        col = np.empty(n, dtype=np.int64)
        for c in range(spec.classes):
            peaked = np.full(card, (1.0 - _PEAK_MASS) / (card - 1))
            peaked[peaks[c]] = _PEAK_MASS
            p = (1.0 - d) * base + d * peaked
            p = p / p.sum()
            idx = np.flatnonzero(z == c)
            col[idx] = rng.choice(card, size=len(idx), p=p)
        if spec.missing_rate > 0:
            col[rng.random(n) < spec.missing_rate] = MISSING_CODE
        cols.append(col)

    for v in range(spec.numeric_vars):
        center = rng.uniform(30.0, 60.0)
        scale = rng.uniform(8.0, 16.0)
        offsets = rng.normal(0.0, 1.0, size=spec.classes)
        col = center + d * 1.5 * scale * offsets[z] + rng.normal(0.0, 1.0, size=n) * scale * (1.0 - 0.6 * d)
        cols.append(np.round(col, 3))

    return MicroTable(population_schema(spec), tuple(cols))


def write_fixture(spec: PopulationSpec, seed: int, out_dir) -> tuple[Path, Path]:
    """Generate a population and write population.csv + schema.yaml."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = generate_population(spec, seed)
    csv_path = out_dir / "population.csv"
    schema_path = out_dir / "schema.yaml"
    write_csv(table, csv_path)
    write_schema(table.schema, schema_path)
    return csv_path, schema_path


# -- association diagnostics ---------------------------------------------------

def cramers_v(table: MicroTable, a: str, b: str) -> float:
    """Bias-uncorrected Cramer's V between two categorical columns
    (missing excluded)."""
    sa = table.schema.var(a)
    sb = table.schema.var(b)
    if not (sa.is_categorical and sb.is_categorical):
        raise NotCategorical("Cramer's V needs two categorical variables")
    ca = table.column(a)
    cb = table.column(b)
    keep = (ca != MISSING_CODE) & (cb != MISSING_CODE)
    ca, cb = ca[keep], cb[keep]
    n = len(ca)
    if n == 0:
        return 0.0
    counts = np.bincount(ca * sb.n_categories + cb,
                         minlength=sa.n_categories * sb.n_categories)
    obs = counts.reshape(sa.n_categories, sb.n_categories)
    obs = obs[obs.sum(axis=1) > 0][:, obs.sum(axis=0) > 0]
    r, c = obs.shape
    if min(r, c) < 2:
        return 0.0
    row = obs.sum(axis=1, keepdims=True)
    col = obs.sum(axis=0, keepdims=True)
    expected = row * col / n
    chi2 = float(np.sum((obs - expected) ** 2 / expected))
    return float(np.sqrt(chi2 / (n * (min(r, c) - 1))))


def mean_cramers_v(table: MicroTable, variables=None) -> float:
    """Mean pairwise V over the categorical variables (all by default)."""
    if variables is None:
        variables = [v.name for v in table.schema.variables if v.is_categorical]
    pairs = [(a, b) for i, a in enumerate(variables) for b in variables[i + 1:]]
    if not pairs:
        raise ConfigError("need at least two categorical variables")
    return float(np.mean([cramers_v(table, a, b) for a, b in pairs]))
