"""Attribution-risk scoring of a synthetic table against its original.

The attack model: an adversary knows a record's key variables and that the
record is in the original data, looks the key combination up in the synthetic
data, and predicts the modal target value of that synthetic key class.  Key
classes are first filtered on their within-class agreement (the proportion of
the class sharing the modal target); with the default threshold of 1 only
unanimous classes are kept.  The raw score is the fraction of original
records, among those whose key combination was retained, whose true target
equals the predicted value.  It is then rescaled against the success rate of
guessing from the target's univariate distribution, so 0 means "no better
than guessing" and values below 0 are possible.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data_model import MISSING, MicroTable
from .errors import (
    ConfigError,
    DegenerateBaseline,
    EmptySynth,
    EmptyTable,
    MetricError,
    NotCategorical,
)

logger = logging.getLogger(__name__)

VALID_KEY_SIZES = (3, 4, 5, 6)


@dataclass(frozen=True)
class AttackConfig:
    """Key/target sweep definition.

    ``keys`` is an ordered list of exactly six variables; a key-set size of k
    uses the first k of them.  Conventionally three targets are scored; any
    non-empty target list is accepted.
    """

    keys: tuple[str, ...]
    targets: tuple[str, ...]
    key_sizes: tuple[int, ...] = VALID_KEY_SIZES
    weap_threshold: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(self.keys))
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "key_sizes", tuple(sorted(set(int(k) for k in self.key_sizes))))
        if len(self.keys) != 6 or len(set(self.keys)) != 6:
            raise ConfigError("attack needs exactly 6 distinct key variables")
        if not self.targets or len(set(self.targets)) != len(self.targets):
            raise ConfigError("attack needs at least one distinct target variable")
        if set(self.keys) & set(self.targets):
            raise ConfigError("targets must not appear among the keys")
        if not self.key_sizes or not set(self.key_sizes) <= set(VALID_KEY_SIZES):
            raise ConfigError(f"key sizes must be a non-empty subset of {set(VALID_KEY_SIZES)}")
        if not (0.0 < self.weap_threshold <= 1.0):
            raise ConfigError("weap threshold must be in (0, 1]")


@dataclass(frozen=True)
class RiskScore:
    """Aggregate over the (target x key-size) sweep: means of the per-pair
    raw scores, baselines and rescaled scores, plus the mean fraction of
    original records covered by retained key classes."""

    raw_tcap: float
    baseline: float
    marginal: float
    matched_fraction: float


class TcapResult(NamedTuple):
    raw_tcap: float
    matched_fraction: float
    no_matches: bool


def _cardinalities(a: MicroTable, b: MicroTable | None, names) -> list[int]:
    cards = []
    for name in names:
        spec = a.schema.var(name)
        if not spec.is_categorical:
            raise NotCategorical(f"{name} is numeric; bin it before using it in the attack")
        card = spec.n_categories
        if b is not None:
            spec_b = b.schema.var(name)
            if not spec_b.is_categorical:
                raise NotCategorical(f"{name} is numeric in the compared table")
            card = max(card, spec_b.n_categories)
        cards.append(card)
    return cards


def _combined_codes(table: MicroTable, keys, cards) -> np.ndarray:
    """Encode each row's key tuple as a single int64 (missing shifts to 0)."""
    combined = np.zeros(table.n_rows, dtype=np.int64)
    scale = 1
    for name, card in zip(keys, cards):
        if scale > (1 << 62) // (card + 1):
            raise MetricError("key space too large to encode")
        combined = combined + (table.column(name) + 1) * scale
        scale *= card + 1
    return combined


def _weap_groups(synth: MicroTable, keys, target, cards, target_card):
    """Per distinct synthetic key tuple: (sorted ids, modal code, weap, size).

    Modal ties break toward the lowest category code, with Missing (code -1)
    lowest of all.
    """
    if synth.n_rows == 0:
        raise EmptySynth("synthetic table is empty")
    ids = _combined_codes(synth, keys, cards)
    uniq, inverse = np.unique(ids, return_inverse=True)
    t = synth.column(target) + 1
    n_levels = target_card + 1
    counts = np.bincount(inverse * n_levels + t, minlength=len(uniq) * n_levels)
    counts = counts.reshape(len(uniq), n_levels)
    modal = counts.argmax(axis=1).astype(np.int64) - 1
    modal_count = counts.max(axis=1)
    size = counts.sum(axis=1)
    weap = modal_count / size
    return uniq, modal, weap, size


def weap_table(synth: MicroTable, keys, target) -> dict:
    """Decoded map: key-label tuple -> (modal target label, weap, class size)."""
    cards = _cardinalities(synth, None, keys)
    tspec = synth.schema.var(target)
    if not tspec.is_categorical:
        raise NotCategorical(f"{target} is numeric; bin it before using it as a target")
    uniq, modal, weap, size = _weap_groups(synth, keys, target, cards, tspec.n_categories)

    key_specs = [synth.schema.var(k) for k in keys]
    out = {}
    for gid, m, w, s in zip(uniq, modal, weap, size):
        labels = []
        rem = int(gid)
        for spec, card in zip(key_specs, cards):
            code = rem % (card + 1) - 1
            rem //= card + 1
            labels.append(MISSING if code == -1 else spec.categories[code])
        mlabel = MISSING if m == -1 else tspec.categories[m]
        out[tuple(labels)] = (mlabel, float(w), int(s))
    return out


def tcap_raw(original: MicroTable, synth: MicroTable, keys, target,
             weap_threshold: float = 1.0) -> TcapResult:
    """Correct-attribution probability of ``synth`` measured on ``original``.

    Synthetic key classes with weap below the threshold are discarded; every
    original record whose key tuple survives is attributed the class's modal
    target.  With no surviving match the score is reported as 0 alongside the
    ``no_matches`` flag rather than substituting the baseline.
    """
    if original.n_rows == 0:
        raise EmptyTable("original table is empty")
    cards = _cardinalities(original, synth, keys)
    t_o = original.schema.var(target)
    t_s = synth.schema.var(target)
    if not (t_o.is_categorical and t_s.is_categorical):
        raise NotCategorical(f"{target} is numeric; bin it before using it as a target")
    target_card = max(t_o.n_categories, t_s.n_categories)

    uniq, modal, weap, _ = _weap_groups(synth, keys, target, cards, target_card)
    retained = weap >= weap_threshold

    orig_ids = _combined_codes(original, keys, cards)
    pos = np.searchsorted(uniq, orig_ids)
    pos_clipped = np.minimum(pos, len(uniq) - 1)
    found = uniq[pos_clipped] == orig_ids
    matched = found & retained[pos_clipped]
    n_matched = int(matched.sum())
    if n_matched == 0:
        return TcapResult(0.0, 0.0, True)
    correct = matched & (original.column(target) == modal[pos_clipped])
    return TcapResult(int(correct.sum()) / n_matched,
                      n_matched / original.n_rows, False)


def baseline_cap(original: MicroTable, target) -> float:
    """Success probability of drawing the guess from the target's univariate
    distribution: the sum of squared category proportions, Missing included."""
    spec = original.schema.var(target)
    if not spec.is_categorical:
        raise NotCategorical(f"{target} is numeric")
    if original.n_rows == 0:
        raise EmptyTable("original table is empty")
    counts = np.bincount(original.column(target) + 1, minlength=spec.n_categories + 1)
    n = original.n_rows
    # plain left-to-right sum in code order, reproducible by direct enumeration
    total = 0.0
    for c in counts.tolist():
        p = c / n
        total += p * p
    return total


def marginal_tcap(raw: float, baseline: float) -> float:
    """Rescale a raw score between the baseline and 1; negative means the
    synthetic data is less informative than guessing from the marginals."""
    if not 0.0 <= baseline <= 1.0:
        raise MetricError(f"baseline {baseline} outside [0, 1]")
    if baseline == 1.0:
        raise DegenerateBaseline("baseline is 1; every guess is correct")
    return (raw - baseline) / (1.0 - baseline)


@dataclass(frozen=True)
class _RiskPrep:
    """Original-side precomputation shared across many synthetic tables."""

    original: MicroTable
    cfg: AttackConfig
    cards: tuple[int, ...]
    orig_ids: dict[int, np.ndarray]
    baselines: dict[str, float]
    target_cards: dict[str, int]


def prepare_risk(original: MicroTable, cfg: AttackConfig) -> _RiskPrep:
    cards = tuple(_cardinalities(original, None, cfg.keys))
    orig_ids = {k: _combined_codes(original, cfg.keys[:k], cards[:k]) for k in cfg.key_sizes}
    baselines = {}
    target_cards = {}
    for tgt in cfg.targets:
        spec = original.schema.var(tgt)
        if not spec.is_categorical:
            raise NotCategorical(f"{tgt} is numeric; bin it before using it as a target")
        baselines[tgt] = baseline_cap(original, tgt)
        target_cards[tgt] = spec.n_categories
    return _RiskPrep(original, cfg, cards, orig_ids, baselines, target_cards)


def _compatible_cards(prep: _RiskPrep, synth: MicroTable) -> bool:
    for name, card in zip(prep.cfg.keys, prep.cards):
        if synth.schema.var(name).n_categories > card:
            return False
    for tgt, card in prep.target_cards.items():
        if synth.schema.var(tgt).n_categories > card:
            return False
    return True


def overall_risk_prepared(prep: _RiskPrep, synth: MicroTable) -> RiskScore:
    if synth.n_rows == 0:
        raise EmptySynth("synthetic table is empty")
    cfg = prep.cfg
    if not _compatible_cards(prep, synth):
        # synthetic table extended some category dictionary; fall back to the
        # unprepared path with harmonised cardinalities
        return overall_risk(prep.original, synth, cfg)

    raws, bases, margs, fracs = [], [], [], []
    for tgt in cfg.targets:
        base = prep.baselines[tgt]
        for k in cfg.key_sizes:
            keys = cfg.keys[:k]
            uniq, modal, weap, _ = _weap_groups(
                synth, keys, tgt, prep.cards[:k], prep.target_cards[tgt])
            retained = weap >= cfg.weap_threshold
            orig_ids = prep.orig_ids[k]
            pos = np.minimum(np.searchsorted(uniq, orig_ids), len(uniq) - 1)
            found = uniq[pos] == orig_ids
            matched = found & retained[pos]
            n_matched = int(matched.sum())
            if n_matched == 0:
                raw, frac = 0.0, 0.0
                logger.warning("no retained key matches for target=%s keys=%d", tgt, k)
            else:
                correct = matched & (prep.original.column(tgt) == modal[pos])
                raw = int(correct.sum()) / n_matched
                frac = n_matched / prep.original.n_rows
            try:
                marg = marginal_tcap(raw, base)
            except DegenerateBaseline as e:
                raise DegenerateBaseline(f"target={tgt} keys={k}: {e}") from None
            raws.append(raw)
            bases.append(base)
            margs.append(marg)
            fracs.append(frac)
    n = len(margs)
    return RiskScore(sum(raws) / n, sum(bases) / n, sum(margs) / n, sum(fracs) / n)


def overall_risk(original: MicroTable, synth: MicroTable, cfg: AttackConfig) -> RiskScore:
    """Mean rescaled attribution score over the (target x key-size) sweep,
    together with the mean raw score, baseline and matched fraction."""
    raws, bases, margs, fracs = [], [], [], []
    for tgt in cfg.targets:
        base = baseline_cap(original, tgt)
        for k in cfg.key_sizes:
            try:
                res = tcap_raw(original, synth, cfg.keys[:k], tgt, cfg.weap_threshold)
                marg = marginal_tcap(res.raw_tcap, base)
            except MetricError as e:
                raise type(e)(f"target={tgt} keys={k}: {e}") from None
            if res.no_matches:
                logger.warning("no retained key matches for target=%s keys=%d", tgt, k)
            raws.append(res.raw_tcap)
            bases.append(base)
            margs.append(marg)
            fracs.append(res.matched_fraction)
    n = len(margs)
    return RiskScore(sum(raws) / n, sum(bases) / n, sum(margs) / n, sum(fracs) / n)
