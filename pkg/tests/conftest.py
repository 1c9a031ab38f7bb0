import numpy as np
import pytest
import yaml

from sfequiv import (
    AttackConfig,
    BinRule,
    EvaluationConfig,
    FractionGrid,
    MicroTable,
    PopulationSpec,
    RegressionSpec,
    ReplicatePlan,
    Schema,
    VariableSpec,
    generate_population,
    write_csv,
    write_schema,
)
from sfequiv.data_model import CATEGORICAL, NUMERIC, MISSING_CODE


def make_table(variables, rows) -> MicroTable:
    """Literal table builder for hand-written cases.

    ``variables`` is a list of (name, kind, categories); ``rows`` a list of
    dicts mapping names to category labels, floats, or None for missing.
    """
    specs = tuple(
        VariableSpec(name, kind, tuple(cats) if cats else ())
        for name, kind, cats in variables)
    schema = Schema(specs)
    cols = []
    for spec in specs:
        values = []
        for row in rows:
            v = row[spec.name]
            if spec.is_categorical:
                values.append(MISSING_CODE if v is None else spec.categories.index(v))
            else:
                values.append(np.nan if v is None else float(v))
        dtype = np.int64 if spec.is_categorical else np.float64
        cols.append(np.asarray(values, dtype=dtype))
    return MicroTable(schema, tuple(cols))


def fixture_attack() -> AttackConfig:
    return AttackConfig(keys=("c1", "n1", "c2", "c3", "c4", "c5"),
                        targets=("c6", "c7", "c8"))


def fixture_regressions() -> tuple[RegressionSpec, RegressionSpec]:
    return (
        RegressionSpec("status_model", "c6", ("L0",),
                       ("c4", "c5", "c7", "n1"), frozenset({"n1"})),
        RegressionSpec("tenure_model", "c7", ("L0",),
                       ("c4", "c5", "c6", "n1"), frozenset({"n1"})),
    )


def fixture_config(schema: Schema, **overrides) -> EvaluationConfig:
    base = dict(
        schema=schema,
        attack=fixture_attack(),
        regressions=fixture_regressions(),
        roc_variables=tuple(v.name for v in schema.variables),
        roc_numeric_bins={"n1": 10, "n2": 10},
        risk_binning={"n1": BinRule(width=5.0)},
        grid=FractionGrid(),
        plan=ReplicatePlan(replicates=5, base_seed=20220405),
    )
    base.update(overrides)
    return EvaluationConfig(**base)


@pytest.fixture(scope="session")
def population() -> MicroTable:
    """10k-row high-dependence population used across the suite."""
    return generate_population(PopulationSpec(), seed=42)


@pytest.fixture(scope="session")
def independent_population() -> MicroTable:
    return generate_population(PopulationSpec(dependence=0.0), seed=42)


@pytest.fixture(scope="session")
def eval_config(population) -> EvaluationConfig:
    return fixture_config(population.schema)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory, population):
    """On-disk fixture: population.csv, schema.yaml and a run config."""
    root = tmp_path_factory.mktemp("fixture")
    write_csv(population, root / "population.csv")
    write_schema(population.schema, root / "schema.yaml")
    config = {
        "schema": "schema.yaml",
        "attack": {
            "keys": ["c1", "n1", "c2", "c3", "c4", "c5"],
            "targets": ["c6", "c7", "c8"],
        },
        "risk_binning": {"n1": {"width": 5}},
        "roc": {
            "variables": [v.name for v in population.schema.variables],
            "numeric_bins": 10,
        },
        "regressions": [
            {"name": "status_model", "target": "c6", "positive": ["L0"],
             "predictors": ["c4", "c5", "c7", "n1"], "numeric_predictors": ["n1"]},
            {"name": "tenure_model", "target": "c7", "positive": ["L0"],
             "predictors": ["c4", "c5", "c6", "n1"], "numeric_predictors": ["n1"]},
        ],
        "grid": [0.01, 0.1, 0.5, 0.9],
        "replicates": 3,
        "base_seed": 20220405,
    }
    with open(root / "config.yaml", "w") as fh:
        yaml.safe_dump(config, fh, sort_keys=False)
    return root
