"""Built-in synthesizers and the adapter for externally generated data.

Two generators are provided for end-to-end testing: an independent-marginals
baseline (each variable resampled from its own empirical distribution,
destroying the joint structure) and a sequential tree synthesizer that
visits variables in a fixed order, bootstraps the first, and draws each
later variable from a binary regression/classification tree fitted on the
original data with the earlier-sequence variables as predictors.

Tree construction is standard greedy CART: categorical targets split on
Gini impurity reduction, numeric targets on variance reduction (both as
weighted impurity decrease).  Categorical predictor splits are searched
exhaustively over the 2^(k-1)-1 canonical subsets up to 12 observed
categories; above that the categories are ranked by their target mean (or
modal-class share) and only the k-1 contiguous splits of that ranking are
tried.  Missing values are first-class: a categorical Missing is an ordinary
category in the subset search, a numeric NaN is routed to whichever side of
the threshold scores better (the "learned default branch", stored on the
node).  Leaves keep the indices of the training rows that reached them;
drawing samples uniformly from the leaf's observed target values, never a
model summary, so synthetic cells are always donor values.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Union

import numpy as np

from .data_model import MicroTable, Schema, load_csv
from .errors import ConfigError, DataError, EmptyTable, UnknownVariable
from .seeds import mix_seed

logger = logging.getLogger(__name__)

_EXHAUSTIVE_SUBSET_LIMIT = 12


@dataclass(frozen=True)
class CartParams:
    min_leaf: int = 5
    max_depth: int = 30
    min_split_improvement: float = 1e-7

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ConfigError("min_leaf must be >= 1")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.min_split_improvement <= 0:
            raise ConfigError("min_split_improvement must be > 0")


@dataclass(frozen=True)
class CartLeaf:
    rows: np.ndarray  # indices into the training table


@dataclass(frozen=True)
class CartSplit:
    var: str
    numeric: bool
    threshold: float | None
    missing_left: bool
    left_categories: frozenset[int] | None
    seen_categories: frozenset[int] | None
    majority_left: bool
    left: "CartNode"
    right: "CartNode"


CartNode = Union[CartLeaf, CartSplit]


def visit_sequence(schema: Schema) -> tuple[str, ...]:
    """Synthesis order: numeric variables first (alphabetical), then
    categorical ascending by declared category count, ties alphabetical."""
    numeric = sorted(v.name for v in schema.variables if not v.is_categorical)
    categorical = sorted(
        (v for v in schema.variables if v.is_categorical),
        key=lambda v: (v.n_categories, v.name))
    return tuple(numeric) + tuple(v.name for v in categorical)


def synth_independent(table: MicroTable, n: int, seed: int) -> MicroTable:
    """Each variable drawn independently from its empirical distribution."""
    if n < 1:
        raise ConfigError("sample size must be >= 1")
    if table.n_rows == 0:
        raise EmptyTable("cannot synthesize from an empty table")
    rng = np.random.default_rng(mix_seed(seed, 0x1D))
    cols = []
    for col in table.columns:
        cols.append(col[rng.integers(0, table.n_rows, size=n)])
    return MicroTable(table.schema, tuple(cols))


# -- tree induction -----------------------------------------------------------

class _GiniTarget:
    """Categorical target: shifted codes (Missing = class 0)."""

    def __init__(self, codes: np.ndarray, card: int):
        self.y = codes + 1
        self.n_classes = card + 1

    def node_stats(self, rows):
        counts = np.bincount(self.y[rows], minlength=self.n_classes)
        n = len(rows)
        impurity = 1.0 - float(np.sum((counts / n) ** 2))
        return counts, n, impurity

    def pure(self, rows) -> bool:
        return len(np.unique(self.y[rows])) <= 1


class _VarianceTarget:
    """Numeric target; NaN cells carry no signal but stay in donor pools."""

    def __init__(self, values: np.ndarray):
        self.y = values

    def pure(self, rows) -> bool:
        vals = self.y[rows]
        vals = vals[~np.isnan(vals)]
        return vals.size <= 1 or float(vals.min()) == float(vals.max())


def _gini_gains(left_counts, right_counts, n_left, n_right, n, parent_imp):
    """Weighted Gini decrease for stacks of candidate partitions."""
    with np.errstate(invalid="ignore", divide="ignore"):
        imp_l = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
        imp_r = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
    imp_l = np.where(n_left > 0, imp_l, 0.0)
    imp_r = np.where(n_right > 0, imp_r, 0.0)
    return parent_imp - (n_left * imp_l + n_right * imp_r) / n


def _sse_gains(cs_l, css_l, m_l, cs_t, css_t, m_t, sse_p):
    """Variance-reduction gain from centered cumulants of candidate lefts."""
    cs_r = cs_t - cs_l
    css_r = css_t - css_l
    m_r = m_t - m_l
    with np.errstate(invalid="ignore", divide="ignore"):
        sse_l = css_l - np.where(m_l > 0, cs_l**2 / np.maximum(m_l, 1), 0.0)
        sse_r = css_r - np.where(m_r > 0, cs_r**2 / np.maximum(m_r, 1), 0.0)
    return (sse_p - sse_l - sse_r) / m_t


def _best_numeric_split(vals, target, rows, min_leaf):
    """Best threshold for one numeric predictor at one node.

    Candidates are midpoints between consecutive distinct values, ascending.
    When the predictor has missing values at this node, each threshold is
    tried with NaN routed left and routed right (in that order); otherwise
    NaNs would be routed to the majority side.  Returns
    (gain, threshold, missing_left) or None.
    """
    v_node = vals[rows]
    miss = np.isnan(v_node)
    nm_rows = rows[~miss]
    ms_rows = rows[miss]
    if len(nm_rows) < 2:
        return None
    order = np.argsort(v_node[~miss], kind="stable")
    sv = v_node[~miss][order]
    sr = nm_rows[order]
    bound = np.flatnonzero(sv[:-1] != sv[1:])
    if bound.size == 0:
        return None
    thresholds = (sv[bound] + sv[bound + 1]) / 2.0
    n = len(rows)
    n_miss = len(ms_rows)
    n_left_nm = (bound + 1).astype(np.float64)

    if isinstance(target, _GiniTarget):
        counts, _, parent_imp = target.node_stats(rows)
        one_hot = np.zeros((len(sr), target.n_classes))
        one_hot[np.arange(len(sr)), target.y[sr]] = 1.0
        cum = np.cumsum(one_hot, axis=0)
        left_nm = cum[bound]
        miss_counts = np.bincount(target.y[ms_rows], minlength=target.n_classes).astype(float)

        def gains_for(miss_left: bool):
            left = left_nm + miss_counts if miss_left else left_nm
            n_l = n_left_nm + (n_miss if miss_left else 0)
            n_r = n - n_l
            g = _gini_gains(left, counts - left, n_l, n_r, n, parent_imp)
            return np.where((n_l >= min_leaf) & (n_r >= min_leaf), g, -np.inf)
    else:
        t = target.y[sr]
        t_all = target.y[rows]
        nn_all = ~np.isnan(t_all)
        m_t = int(nn_all.sum())
        if m_t == 0:
            return None
        mu = float(t_all[nn_all].mean())
        d = np.where(np.isnan(t), 0.0, t - mu)
        d2 = d * d
        has = (~np.isnan(t)).astype(np.float64)
        cs = np.cumsum(d)[bound]
        css = np.cumsum(d2)[bound]
        m_nm = np.cumsum(has)[bound]
        t_m = target.y[ms_rows]
        nn_m = ~np.isnan(t_m)
        cs_m = float((t_m[nn_m] - mu).sum())
        css_m = float(((t_m[nn_m] - mu) ** 2).sum())
        m_m = float(nn_m.sum())
        cs_t = float((t_all[nn_all] - mu).sum())
        css_t = float(((t_all[nn_all] - mu) ** 2).sum())
        sse_p = css_t - cs_t**2 / m_t

        def gains_for(miss_left: bool):
            cs_l = cs + (cs_m if miss_left else 0.0)
            css_l = css + (css_m if miss_left else 0.0)
            m_l = m_nm + (m_m if miss_left else 0.0)
            n_l = n_left_nm + (n_miss if miss_left else 0)
            n_r = n - n_l
            g = _sse_gains(cs_l, css_l, m_l, cs_t, css_t, float(m_t), sse_p)
            return np.where((n_l >= min_leaf) & (n_r >= min_leaf), g, -np.inf)

    if n_miss == 0:
        gains = gains_for(False)
        pos = int(np.argmax(gains))
        if not np.isfinite(gains[pos]):
            return None
        # no NaN observed here: future NaN routes to the majority side
        missing_left = n_left_nm[pos] >= n - n_left_nm[pos]
        return float(gains[pos]), float(thresholds[pos]), bool(missing_left)

    g_left = gains_for(True)
    g_right = gains_for(False)
    flat = np.empty(2 * len(thresholds))
    flat[0::2] = g_left
    flat[1::2] = g_right
    pos = int(np.argmax(flat))
    if not np.isfinite(flat[pos]):
        return None
    return float(flat[pos]), float(thresholds[pos // 2]), pos % 2 == 0


def _category_subsets(n_rest: int):
    """Canonical enumeration of which rest-categories join the pinned first
    category on the left: by subset size ascending, lexicographic within."""
    for size in range(n_rest):
        yield from combinations(range(n_rest), size)


def _best_categorical_split(codes, target, rows, min_leaf):
    """Best left-subset for one categorical predictor at one node.

    Returns (gain, left_codes frozenset, seen_codes frozenset, majority_left)
    or None.
    """
    c = codes[rows]
    uniq = np.unique(c)
    k = len(uniq)
    if k < 2:
        return None
    cat_idx = np.searchsorted(uniq, c)
    n = len(rows)
    row_counts = np.bincount(cat_idx, minlength=k).astype(np.float64)

    if isinstance(target, _GiniTarget):
        counts, _, parent_imp = target.node_stats(rows)
        C = target.n_classes
        cat_class = np.bincount(cat_idx * C + target.y[rows], minlength=k * C)
        cat_class = cat_class.reshape(k, C).astype(np.float64)

        def eval_masks(masks):
            left_counts = masks @ cat_class
            n_l = masks @ row_counts
            n_r = n - n_l
            g = _gini_gains(left_counts, counts - left_counts, n_l, n_r, n, parent_imp)
            return np.where((n_l >= min_leaf) & (n_r >= min_leaf), g, -np.inf)

        modal = int(np.argmax(counts))
        with np.errstate(invalid="ignore"):
            rank_score = cat_class[:, modal] / np.maximum(row_counts, 1)
    else:
        t = target.y[rows]
        nn = ~np.isnan(t)
        m_t = int(nn.sum())
        if m_t == 0:
            return None
        mu = float(t[nn].mean())
        d = np.where(nn, t - mu, 0.0)
        hasv = nn.astype(np.float64)
        cat_cs = np.bincount(cat_idx, weights=d, minlength=k)
        cat_css = np.bincount(cat_idx, weights=d * d, minlength=k)
        cat_m = np.bincount(cat_idx, weights=hasv, minlength=k)
        cs_t = float(cat_cs.sum())
        css_t = float(cat_css.sum())
        sse_p = css_t - cs_t**2 / m_t

        def eval_masks(masks):
            cs_l = masks @ cat_cs
            css_l = masks @ cat_css
            m_l = masks @ cat_m
            n_l = masks @ row_counts
            n_r = n - n_l
            g = _sse_gains(cs_l, css_l, m_l, cs_t, css_t, float(m_t), sse_p)
            return np.where((n_l >= min_leaf) & (n_r >= min_leaf), g, -np.inf)

        with np.errstate(invalid="ignore"):
            rank_score = np.where(cat_m > 0, cat_cs / np.maximum(cat_m, 1), 0.0)

    if k <= _EXHAUSTIVE_SUBSET_LIMIT:
        subsets = list(_category_subsets(k - 1))
        masks = np.zeros((len(subsets), k))
        masks[:, 0] = 1.0  # first observed category pinned to the left
        for i, sub in enumerate(subsets):
            for j in sub:
                masks[i, j + 1] = 1.0
        lefts = [frozenset([int(uniq[0])] + [int(uniq[j + 1]) for j in sub])
                 for sub in subsets]
    else:
        order = np.lexsort((uniq, rank_score))
        masks = np.zeros((k - 1, k))
        lefts = []
        for i in range(k - 1):
            masks[i, order[: i + 1]] = 1.0
            lefts.append(frozenset(int(uniq[j]) for j in order[: i + 1]))

    gains = eval_masks(masks)
    pos = int(np.argmax(gains))
    if not np.isfinite(gains[pos]):
        return None
    n_l = float(masks[pos] @ row_counts)
    return (float(gains[pos]), lefts[pos], frozenset(int(u) for u in uniq),
            n_l >= n - n_l)


def cart_fit(table: MicroTable, target: str, predictors, params: CartParams = CartParams()) -> CartNode:
    """Grow a binary tree predicting ``target`` from ``predictors``.

    A node becomes a leaf when it is pure, hits the depth limit, cannot give
    both children ``min_leaf`` rows, or no candidate reaches
    ``min_split_improvement`` (no valid split is not an error).
    """
    if table.n_rows == 0:
        raise EmptyTable("cannot fit on an empty table")
    predictors = tuple(predictors)
    if not predictors:
        raise ConfigError("at least one predictor is required")
    if target in predictors:
        raise ConfigError(f"target {target} is also a predictor")
    tspec = table.schema.var(target)
    for p in predictors:
        table.schema.var(p)  # raises UnknownVariable

    if tspec.is_categorical:
        tstate = _GiniTarget(table.column(target), tspec.n_categories)
    else:
        tstate = _VarianceTarget(table.column(target))
    pred_cols = {p: table.column(p) for p in predictors}
    pred_numeric = {p: not table.schema.var(p).is_categorical for p in predictors}

    def grow(rows: np.ndarray, depth: int) -> CartNode:
        if (depth >= params.max_depth or len(rows) < 2 * params.min_leaf
                or tstate.pure(rows)):
            return CartLeaf(rows)
        best_gain = -np.inf
        best = None
        for p in predictors:
            if pred_numeric[p]:
                found = _best_numeric_split(pred_cols[p], tstate, rows, params.min_leaf)
                if found is not None and found[0] > best_gain:
                    gain, thr, miss_left = found
                    best_gain = gain
                    best = ("num", p, thr, miss_left)
            else:
                found = _best_categorical_split(pred_cols[p], tstate, rows, params.min_leaf)
                if found is not None and found[0] > best_gain:
                    gain, left_set, seen, maj_left = found
                    best_gain = gain
                    best = ("cat", p, left_set, seen, maj_left)
        if best is None or best_gain < params.min_split_improvement:
            return CartLeaf(rows)
        if best[0] == "num":
            _, p, thr, miss_left = best
            v = pred_cols[p][rows]
            mask = np.where(np.isnan(v), miss_left, v <= thr)
            left = grow(rows[mask], depth + 1)
            right = grow(rows[~mask], depth + 1)
            return CartSplit(p, True, thr, miss_left, None, None,
                            bool(mask.sum() >= len(rows) - mask.sum()), left, right)
        _, p, left_set, seen, maj_left = best
        v = pred_cols[p][rows]
        mask = np.isin(v, sorted(left_set))
        left = grow(rows[mask], depth + 1)
        right = grow(rows[~mask], depth + 1)
        return CartSplit(p, False, None, maj_left, left_set, seen, maj_left, left, right)

    return grow(np.arange(table.n_rows), 0)


def first_split(node: CartNode):
    """(var, criterion, ...) description of the root split, or None for a leaf.

    criterion is the threshold for numeric splits and the left category-code
    set for categorical ones; handy for comparing against enumeration oracles.
    """
    if isinstance(node, CartLeaf):
        return None
    if node.numeric:
        return node.var, node.threshold
    return node.var, node.left_categories


def _route_one(node: CartNode, row) -> CartLeaf:
    while isinstance(node, CartSplit):
        v = row[node.var]
        if node.numeric:
            go_left = node.missing_left if np.isnan(v) else v <= node.threshold
        else:
            if v in node.left_categories:
                go_left = True
            elif v in node.seen_categories:
                go_left = False
            else:
                go_left = node.majority_left
        node = node.left if go_left else node.right
    return node


def cart_draw(node: CartNode, row, table: MicroTable, target: str, rng) -> float | int:
    """Route one (partial) synthetic row to a leaf and draw the target
    uniformly from the leaf's training-row target values.  Unseen categorical
    predictor values route via the majority branch."""
    leaf = _route_one(node, row)
    donors = table.column(target)[leaf.rows]
    value = donors[int(rng.integers(0, len(donors)))]
    return float(value) if donors.dtype == np.float64 else int(value)


def _leaf_assignments(node: CartNode, columns: dict, idx: np.ndarray):
    """Yield (leaf, row indices) pairs in left-first depth order."""
    if isinstance(node, CartLeaf):
        yield node, idx
        return
    v = columns[node.var][idx]
    if node.numeric:
        mask = np.where(np.isnan(v), node.missing_left, v <= node.threshold)
    else:
        mask = np.isin(v, sorted(node.left_categories))
        if node.majority_left:
            mask |= ~np.isin(v, sorted(node.seen_categories))
    yield from _leaf_assignments(node.left, columns, idx[mask])
    yield from _leaf_assignments(node.right, columns, idx[~mask])


def _batch_draw(node: CartNode, columns: dict, table: MicroTable, target: str,
                rng, n: int) -> np.ndarray:
    donor_col = table.column(target)
    out = np.empty(n, dtype=donor_col.dtype)
    for leaf, which in _leaf_assignments(node, columns, np.arange(n)):
        if len(which) == 0:
            continue
        donors = donor_col[leaf.rows]
        out[which] = donors[rng.integers(0, len(donors), size=len(which))]
    return out


def synth_cart(table: MicroTable, n: int, seed: int,
               params: CartParams = CartParams()) -> MicroTable:
    """Sequential tree synthesis: first variable bootstrapped, each later one
    drawn from a tree fitted on the original with the earlier-sequence
    variables as predictors."""
    if n < 1:
        raise ConfigError("sample size must be >= 1")
    if table.n_rows == 0:
        raise EmptyTable("cannot synthesize from an empty table")
    seq = visit_sequence(table.schema)
    synth_cols: dict[str, np.ndarray] = {}
    rng0 = np.random.default_rng(mix_seed(seed, 0xB0, 0))
    synth_cols[seq[0]] = table.column(seq[0])[rng0.integers(0, table.n_rows, size=n)]
    for j in range(1, len(seq)):
        var = seq[j]
        tree = cart_fit(table, var, seq[:j], params)
        rng_v = np.random.default_rng(mix_seed(seed, 0xB0, j))
        synth_cols[var] = _batch_draw(tree, synth_cols, table, var, rng_v, n)
    return MicroTable(table.schema,
                      tuple(synth_cols[v.name] for v in table.schema.variables))


def load_external_synth(path, schema: Schema) -> MicroTable:
    """Load an externally generated synthetic CSV against the original schema.

    Novel categorical values are accepted by extending the dictionary (union,
    appended in first-seen order, with a warning); missing variables are an
    error, extra columns are ignored.
    """
    from dataclasses import replace

    open_schema = Schema(tuple(replace(s, infer_categories=True) if s.is_categorical else s
                               for s in schema.variables))
    table = load_csv(path, open_schema)
    for before, after in zip(schema.variables, table.schema.variables):
        if after.n_categories > before.n_categories:
            novel = after.categories[before.n_categories:]
            logger.warning("%s: %s declares novel categories %s; dictionary extended",
                           path, before.name, list(novel))
    return table
