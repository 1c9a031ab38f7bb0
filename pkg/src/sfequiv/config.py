"""Run configuration: one YAML document wiring every pipeline stage together.

Sections
--------
``schema``          path to the schema YAML (relative paths resolve against
                    the config file)
``attack``          keys / targets / key_sizes / weap_threshold
``risk_binning``    per-variable width or edges turning numeric variables
                    into attack keys (e.g. 5-year age bands)
``roc``             tabulation variable list, default quantile bin count for
                    numeric variables, optional per-variable overrides
``regressions``     exactly two logistic model specifications
``utility_weights`` weights of (univariate roc, bivariate roc, cio)
``grid``            sampling fractions (defaults to the built-in 22)
``replicates``      samples per fraction (default 100) and ``base_seed``
``synth_replicates`` how many synthetic datasets are averaged per report row
``cio_on_failure``  "zero" scores an unfittable regression as 0 utility,
                    "error" aborts instead
``cart``            tree parameters for the built-in synthesizer
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import yaml

from .binning import BinRule
from .data_model import Schema, read_schema
from .errors import ConfigError
from .risk import AttackConfig
from .sampling import DEFAULT_FRACTIONS, FractionGrid, ReplicatePlan
from .synth import CartParams
from .utility import RegressionSpec

DEFAULT_ROC_BINS = 10


@dataclass(frozen=True)
class EvaluationConfig:
    schema: Schema
    attack: AttackConfig
    regressions: tuple[RegressionSpec, ...]
    roc_variables: tuple[str, ...]
    roc_numeric_bins: Mapping[str, object] = field(default_factory=dict)
    risk_binning: Mapping[str, BinRule] = field(default_factory=dict)
    utility_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    grid: FractionGrid = FractionGrid()
    plan: ReplicatePlan = ReplicatePlan()
    synth_replicates: int = 5
    cio_on_failure: str = "zero"
    cart: CartParams = CartParams()

    def __post_init__(self):
        object.__setattr__(self, "regressions", tuple(self.regressions))
        object.__setattr__(self, "roc_variables", tuple(self.roc_variables))
        object.__setattr__(self, "roc_numeric_bins", dict(self.roc_numeric_bins))
        object.__setattr__(self, "risk_binning", dict(self.risk_binning))
        object.__setattr__(self, "utility_weights",
                           tuple(float(w) for w in self.utility_weights))
        validate_config(self)


def validate_config(cfg: EvaluationConfig) -> None:
    schema = cfg.schema
    if len(cfg.regressions) != 2:
        raise ConfigError("exactly two regression specifications are required")
    if len(cfg.utility_weights) != 3 or any(w < 0 for w in cfg.utility_weights) \
            or sum(cfg.utility_weights) <= 0:
        raise ConfigError("utility weights must be 3 non-negative numbers, positive sum")
    if cfg.synth_replicates < 1:
        raise ConfigError("synth_replicates must be >= 1")
    if cfg.cio_on_failure not in ("zero", "error"):
        raise ConfigError("cio_on_failure must be 'zero' or 'error'")

    for name in cfg.attack.keys + cfg.attack.targets:
        if name not in schema:
            raise ConfigError(f"attack variable {name!r} not in schema")
        spec = schema.var(name)
        if not spec.is_categorical and name not in cfg.risk_binning:
            raise ConfigError(
                f"numeric attack variable {name!r} needs a risk_binning rule")
    for name in cfg.risk_binning:
        if name not in schema:
            raise ConfigError(f"risk_binning variable {name!r} not in schema")
        if schema.var(name).is_categorical:
            raise ConfigError(f"risk_binning variable {name!r} is already categorical")

    if not cfg.roc_variables:
        raise ConfigError("roc variable list is empty")
    for name in cfg.roc_variables:
        if name not in schema:
            raise ConfigError(f"roc variable {name!r} not in schema")
        if not schema.var(name).is_categorical and name not in cfg.roc_numeric_bins:
            raise ConfigError(f"numeric roc variable {name!r} has no binning")

    for rspec in cfg.regressions:
        for name in (rspec.target,) + rspec.predictors:
            if name not in schema:
                raise ConfigError(f"{rspec.name}: variable {name!r} not in schema")
        tspec = schema.var(rspec.target)
        if not tspec.is_categorical:
            raise ConfigError(f"{rspec.name}: target {rspec.target!r} must be categorical")
        for cat in rspec.positive:
            if cat not in tspec.categories:
                raise ConfigError(
                    f"{rspec.name}: positive category {cat!r} not in {rspec.target!r}")
        schema_numeric = {p for p in rspec.predictors
                         if not schema.var(p).is_categorical}
        if schema_numeric != set(rspec.numeric_predictors):
            raise ConfigError(
                f"{rspec.name}: numeric_predictors {sorted(rspec.numeric_predictors)} "
                f"disagree with schema ({sorted(schema_numeric)})")


def _require(doc: dict, key: str, path) -> object:
    if key not in doc:
        raise ConfigError(f"{path}: missing required section {key!r}")
    return doc[key]


def _bin_rule(entry, name: str, path) -> BinRule:
    if not isinstance(entry, dict):
        raise ConfigError(f"{path}: risk_binning.{name} must be a mapping")
    if "width" in entry:
        return BinRule(width=float(entry["width"]), origin=float(entry.get("origin", 0.0)))
    if "edges" in entry:
        return BinRule(edges=tuple(float(e) for e in entry["edges"]))
    raise ConfigError(f"{path}: risk_binning.{name} needs 'width' or 'edges'")


def load_config(path) -> EvaluationConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a mapping")

    schema_path = Path(str(_require(doc, "schema", path)))
    if not schema_path.is_absolute():
        schema_path = path.parent / schema_path
    schema = read_schema(schema_path)

    atk = _require(doc, "attack", path)
    attack = AttackConfig(
        keys=tuple(str(k) for k in _require(atk, "keys", path)),
        targets=tuple(str(t) for t in _require(atk, "targets", path)),
        key_sizes=tuple(int(k) for k in atk.get("key_sizes", (3, 4, 5, 6))),
        weap_threshold=float(atk.get("weap_threshold", 1.0)),
    )

    risk_binning = {str(k): _bin_rule(v, str(k), path)
                    for k, v in doc.get("risk_binning", {}).items()}

    roc = _require(doc, "roc", path)
    roc_variables = tuple(str(v) for v in _require(roc, "variables", path))
    default_bins = int(roc.get("numeric_bins", DEFAULT_ROC_BINS))
    numeric_bins: dict[str, object] = {}
    for name in roc_variables:
        if name in schema and not schema.var(name).is_categorical:
            numeric_bins[name] = default_bins
    for name, bins in roc.get("per_variable_bins", {}).items():
        numeric_bins[str(name)] = int(bins)

    regressions = []
    for entry in _require(doc, "regressions", path):
        regressions.append(RegressionSpec(
            name=str(_require(entry, "name", path)),
            target=str(_require(entry, "target", path)),
            positive=tuple(str(c) for c in _require(entry, "positive", path)),
            predictors=tuple(str(p) for p in _require(entry, "predictors", path)),
            numeric_predictors=frozenset(
                str(p) for p in entry.get("numeric_predictors", ())),
        ))

    weights = doc.get("utility_weights", {})
    if isinstance(weights, dict):
        weight_tuple = (float(weights.get("roc_univariate", 1.0)),
                        float(weights.get("roc_bivariate", 1.0)),
                        float(weights.get("cio", 1.0)))
    else:
        weight_tuple = tuple(float(w) for w in weights)

    grid = FractionGrid(tuple(float(f) for f in doc.get("grid", DEFAULT_FRACTIONS)))
    plan = ReplicatePlan(replicates=int(doc.get("replicates", 100)),
                         base_seed=int(doc.get("base_seed", 20220405)))

    cart_doc = doc.get("cart", {})
    cart = CartParams(
        min_leaf=int(cart_doc.get("min_leaf", 5)),
        max_depth=int(cart_doc.get("max_depth", 30)),
        min_split_improvement=float(cart_doc.get("min_split_improvement", 1e-7)),
    )

    return EvaluationConfig(
        schema=schema,
        attack=attack,
        regressions=tuple(regressions),
        roc_variables=roc_variables,
        roc_numeric_bins=numeric_bins,
        risk_binning=risk_binning,
        utility_weights=weight_tuple,
        grid=grid,
        plan=plan,
        synth_replicates=int(doc.get("synth_replicates", 5)),
        cio_on_failure=str(doc.get("cio_on_failure", "zero")),
        cart=cart,
    )
