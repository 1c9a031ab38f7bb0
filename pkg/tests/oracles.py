"""Independent brute-force reference implementations.

Everything here is deliberately naive (plain Python loops, dictionaries,
two-pass statistics) and kept separate from the library so the fast paths are
checked against code that shares no machinery with them.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from sfequiv.data_model import MISSING_CODE, MicroTable


def decoded_rows(table: MicroTable, names) -> list[tuple]:
    """Rows as tuples of raw codes (ints; categorical missing is -1)."""
    cols = [table.column(n) for n in names]
    return [tuple(int(c[i]) for c in cols) for i in range(table.n_rows)]


def tcap_oracle(original: MicroTable, synth: MicroTable, keys, target,
                threshold: float = 1.0):
    """Nested-loop correct-attribution probability.

    For every original record, scan all synthetic records for key matches,
    compute the modal target of the matching set (ties to the lowest code),
    keep the match only if the modal share meets the threshold, and count
    whether the original record's target equals the modal value.
    """
    keys = list(keys)
    synth_keys = decoded_rows(synth, keys)
    synth_targets = [int(v) for v in synth.column(target)]
    orig_keys = decoded_rows(original, keys)
    orig_targets = [int(v) for v in original.column(target)]

    matched = 0
    correct = 0
    for okey, otgt in zip(orig_keys, orig_targets):
        hits = [t for skey, t in zip(synth_keys, synth_targets) if skey == okey]
        if not hits:
            continue
        tally: dict[int, int] = {}
        for t in hits:
            tally[t] = tally.get(t, 0) + 1
        best_count = max(tally.values())
        modal = min(t for t, c in tally.items() if c == best_count)
        weap = best_count / len(hits)
        if weap >= threshold:
            matched += 1
            if otgt == modal:
                correct += 1
    if matched == 0:
        return 0.0, 0.0, True
    return correct / matched, matched / original.n_rows, False


def weap_oracle(synth: MicroTable, keys, target) -> dict:
    """Group-by-key enumeration of (modal code, weap, size)."""
    keys = list(keys)
    synth_keys = decoded_rows(synth, keys)
    synth_targets = [int(v) for v in synth.column(target)]
    groups: dict[tuple, list[int]] = {}
    for k, t in zip(synth_keys, synth_targets):
        groups.setdefault(k, []).append(t)
    out = {}
    for k, targets in groups.items():
        tally: dict[int, int] = {}
        for t in targets:
            tally[t] = tally.get(t, 0) + 1
        best = max(tally.values())
        modal = min(t for t, c in tally.items() if c == best)
        out[k] = (modal, best / len(targets), len(targets))
    return out


def baseline_oracle(original: MicroTable, target) -> float:
    """Sum of squared proportions by direct counting, in code order
    (Missing first), summed left to right like the implementation."""
    codes = [int(v) for v in original.column(target)]
    n = len(codes)
    card = original.schema.var(target).n_categories
    total = 0.0
    for code in range(-1, card):
        p = codes.count(code) / n
        total += p * p
    return total


# -- tree split enumeration ----------------------------------------------------

def _gini_impurity(values) -> float:
    n = len(values)
    if n == 0:
        return 0.0
    tally: dict[int, int] = {}
    for v in values:
        tally[v] = tally.get(v, 0) + 1
    return 1.0 - sum((c / n) ** 2 for c in tally.values())


def _sse(values) -> float:
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        return 0.0
    mean = sum(vals) / len(vals)
    return sum((v - mean) ** 2 for v in vals)


def _partition_gain(target_kind, t_left, t_right, t_all):
    n = len(t_all)
    if target_kind == "categorical":
        imp_p = _gini_impurity(t_all)
        imp_l = _gini_impurity(t_left)
        imp_r = _gini_impurity(t_right)
        return imp_p - (len(t_left) * imp_l + len(t_right) * imp_r) / n
    m = sum(1 for v in t_all if not math.isnan(v))
    if m == 0:
        return None
    return (_sse(t_all) - _sse(t_left) - _sse(t_right)) / m


def best_split_oracle(table: MicroTable, target, predictors, min_leaf: int):
    """Exhaustive first-split search mirroring the tree's candidate space.

    Returns (gain, var, criterion) where criterion is the numeric threshold
    (with the missing side) or the frozenset of left category codes, or None
    when no candidate satisfies min_leaf.  Enumeration order matches the
    implementation: predictors in the given order, numeric thresholds
    ascending with missing-left before missing-right, categorical subsets by
    size then lexicographically, first strict maximum wins.
    """
    tspec = table.schema.var(target)
    kind = "categorical" if tspec.is_categorical else "numeric"
    tcol = table.column(target)
    tvals = [int(v) for v in tcol] if kind == "categorical" else [float(v) for v in tcol]
    n = table.n_rows

    best_gain = -math.inf
    best = None
    for pred in predictors:
        pspec = table.schema.var(pred)
        col = table.column(pred)
        if pspec.is_categorical:
            observed = sorted({int(v) for v in col})
            if len(observed) < 2:
                continue
            rest = observed[1:]
            for size in range(len(rest)):
                for combo in combinations(range(len(rest)), size):
                    left_set = {observed[0]} | {rest[i] for i in combo}
                    t_left = [tvals[i] for i in range(n) if int(col[i]) in left_set]
                    t_right = [tvals[i] for i in range(n) if int(col[i]) not in left_set]
                    if len(t_left) < min_leaf or len(t_right) < min_leaf:
                        continue
                    gain = _partition_gain(kind, t_left, t_right, tvals)
                    if gain is not None and gain > best_gain:
                        best_gain = gain
                        best = (gain, pred, frozenset(left_set))
        else:
            vals = [float(v) for v in col]
            nonmiss = sorted({v for v in vals if not math.isnan(v)})
            any_missing = any(math.isnan(v) for v in vals)
            if len(nonmiss) < 2:
                continue
            for lo, hi in zip(nonmiss, nonmiss[1:]):
                thr = (lo + hi) / 2.0
                variants = (True, False) if any_missing else (False,)
                for miss_left in variants:
                    left_idx = [i for i in range(n)
                                if (miss_left if math.isnan(vals[i]) else vals[i] <= thr)]
                    left_set = set(left_idx)
                    right_idx = [i for i in range(n) if i not in left_set]
                    if len(left_idx) < min_leaf or len(right_idx) < min_leaf:
                        continue
                    gain = _partition_gain(kind, [tvals[i] for i in left_idx],
                                           [tvals[i] for i in right_idx], tvals)
                    if gain is not None and gain > best_gain:
                        best_gain = gain
                        best = (gain, pred, (thr, miss_left))
    return best


def roc_univariate_oracle(original: MicroTable, synth: MicroTable, var) -> float:
    """Hand tabulation of one categorical variable's cell ratios."""
    def props(t):
        codes = [int(v) for v in t.column(var)]
        return {c: codes.count(c) / len(codes) for c in set(codes)}

    po = props(original)
    ps = props(synth)
    cells = sorted(set(po) | set(ps))
    scores = []
    for c in cells:
        a, b = po.get(c, 0.0), ps.get(c, 0.0)
        scores.append(1.0 if a == b else (0.0 if min(a, b) == 0 else min(a, b) / max(a, b)))
    return sum(scores) / len(scores)
