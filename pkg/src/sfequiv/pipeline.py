"""Shared scoring pipeline: one original table against many synthetic tables.

The evaluator resolves the risk binning once (edges derived from the
original), prepares the original-side attack structures and tabulations, and
then scores any number of compared tables with the identical pipeline,
whether they are synthetic datasets or subsamples of the original.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

from .binning import bin_table, resolve_edges
from .data_model import MicroTable
from .errors import DataError, EmptySynth
from .risk import RiskScore, overall_risk_prepared, prepare_risk
from .utility import UtilityScore, UtilityState

if TYPE_CHECKING:  # pragma: no cover
    from .config import EvaluationConfig


def check_compatible(original: MicroTable, synth: MicroTable) -> None:
    """Both tables must use the same variables and share code dictionaries
    (the compared table's categories may extend the original's)."""
    for o_spec in original.schema.variables:
        if o_spec.name not in synth.schema:
            raise DataError(f"compared table lacks variable {o_spec.name!r}")
        s_spec = synth.schema.var(o_spec.name)
        if s_spec.kind != o_spec.kind:
            raise DataError(f"{o_spec.name!r}: kind mismatch between tables")
        if o_spec.is_categorical:
            m = min(o_spec.n_categories, s_spec.n_categories)
            if o_spec.categories[:m] != s_spec.categories[:m]:
                raise DataError(
                    f"{o_spec.name!r}: category dictionaries are not aligned")


class Evaluator:
    """Cached scoring of compared tables against one original table."""

    def __init__(self, original: MicroTable, cfg: "EvaluationConfig"):
        self.cfg = cfg
        self.original = original
        self.risk_edges = {
            name: resolve_edges(original.column(name), rule)
            for name, rule in cfg.risk_binning.items()
        }
        self._orig_risk_table = bin_table(original, self.risk_edges)
        self._risk_prep = prepare_risk(self._orig_risk_table, cfg.attack)
        self._utility = UtilityState(original, cfg)

    def evaluate(self, synth: MicroTable) -> tuple[UtilityScore, RiskScore]:
        if synth.n_rows == 0:
            raise EmptySynth("synthetic table is empty")
        check_compatible(self.original, synth)
        utility = self._utility.evaluate(synth)
        risk = overall_risk_prepared(self._risk_prep, bin_table(synth, self.risk_edges))
        return utility, risk


def score_tables(original: MicroTable, synth: MicroTable,
                 cfg: "EvaluationConfig") -> tuple[UtilityScore, RiskScore]:
    """One-shot scoring without cache reuse."""
    return Evaluator(original, cfg).evaluate(synth)
