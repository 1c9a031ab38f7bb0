"""Utility scoring: tabulation agreement and regression-coefficient overlap.

Three components, each in [0, 1]:

* ratio-of-counts over univariate tabulations (per-category min/max ratio of
  proportions, averaged over categories then over variables),
* the same over bivariate cross-tabulations (averaged over cells then over
  unordered variable pairs),
* confidence-interval overlap of logistic-regression coefficients fitted
  separately on the original and the synthetic table, negative overlaps
  counted as zero.

The overall score is a weighted mean of the three (equal weights by
default).  All tabulations work on proportions, so the compared tables may
have different sizes, and missing values count as a category of their own.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .binning import assign_bins, quantile_edges
from .data_model import MISSING_CODE, MicroTable
from .errors import (
    ConfigError,
    EmptySynth,
    MetricError,
    MissingBinning,
    NegativeInput,
    NotCategorical,
    RankDeficient,
    SeparationError,
    SingularInformation,
    ZeroWidthInterval,
)

if TYPE_CHECKING:  # pragma: no cover
    from .config import EvaluationConfig

logger = logging.getLogger(__name__)

# normal 97.5% quantile used for the 95% confidence intervals
Z95 = 1.95996

# separation diagnostics for the logistic fit
_BETA_DIVERGENCE = 1e2
_PERFECT_FIT_RESIDUAL = 1e-6


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise MetricError("interval lower bound exceeds upper bound")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    converged: bool
    iterations: int
    term_names: tuple[str, ...] = ()

    def interval(self, j: int) -> ConfidenceInterval:
        b, se = float(self.coefficients[j]), float(self.standard_errors[j])
        return ConfidenceInterval(b - Z95 * se, b + Z95 * se)


@dataclass(frozen=True)
class RegressionSpec:
    """One logistic model: a binarised categorical target and its predictors.

    ``positive`` lists the target categories coded 1 (everything else,
    Missing included, codes 0).  ``numeric_predictors`` names the predictors
    passed through as single columns; the rest are one-hot encoded with the
    original table's modal category as reference and Missing as a level.
    """

    name: str
    target: str
    positive: tuple[str, ...]
    predictors: tuple[str, ...]
    numeric_predictors: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "positive", tuple(self.positive))
        object.__setattr__(self, "predictors", tuple(self.predictors))
        object.__setattr__(self, "numeric_predictors", frozenset(self.numeric_predictors))
        if not self.positive:
            raise ConfigError(f"{self.name}: binarisation needs at least one positive category")
        if self.target in self.predictors:
            raise ConfigError(f"{self.name}: target {self.target} is also a predictor")
        if len(set(self.predictors)) != len(self.predictors):
            raise ConfigError(f"{self.name}: duplicate predictors")
        if not self.numeric_predictors <= set(self.predictors):
            raise ConfigError(f"{self.name}: numeric_predictors must be a subset of predictors")


@dataclass(frozen=True)
class UtilityScore:
    roc_univariate: float
    roc_bivariate: float
    cio: float
    overall: float


def combine_utility(roc_uni: float, roc_bi: float, cio: float,
                    weights: Sequence[float] = (1.0, 1.0, 1.0)) -> float:
    w = [float(x) for x in weights]
    if len(w) != 3 or any(x < 0 for x in w) or sum(w) == 0:
        raise ConfigError("utility weights must be 3 non-negative numbers with positive sum")
    return (w[0] * roc_uni + w[1] * roc_bi + w[2] * cio) / (w[0] + w[1] + w[2])


# -- ratio of counts ----------------------------------------------------------

def roc_cell(y_orig: float, y_synth: float) -> float:
    """min/max ratio of two non-negative estimates; 1 when both are equal.

    Both zero returns 1 by convention, but such cells are excluded upstream;
    exactly one zero scores 0.
    """
    if y_orig < 0 or y_synth < 0:
        raise NegativeInput(f"negative estimate: {y_orig}, {y_synth}")
    if y_orig == y_synth:
        return 1.0
    if y_orig == 0.0 or y_synth == 0.0:
        return 0.0
    return min(y_orig, y_synth) / max(y_orig, y_synth)


def _resolve_edges(original: MicroTable, variables, numeric_binning) -> dict[str, np.ndarray]:
    """Quantile or explicit edges for every numeric variable in the list,
    always derived from the original table."""
    numeric_binning = numeric_binning or {}
    edges = {}
    for name in variables:
        spec = original.schema.var(name)
        if spec.is_categorical:
            continue
        rule = numeric_binning.get(name)
        if rule is None:
            raise MissingBinning(f"numeric variable {name!r} has no binning rule")
        if isinstance(rule, int):
            edges[name] = quantile_edges(original.column(name), rule)
        else:
            edges[name] = np.asarray(rule, dtype=np.float64)
    return edges


def _tab_codes(table: MicroTable, name: str, edges: dict) -> tuple[np.ndarray, int]:
    """Cell codes and number of non-missing levels for one tabulated variable."""
    spec = table.schema.var(name)
    if spec.is_categorical:
        return table.column(name), spec.n_categories
    return assign_bins(table.column(name), edges[name]), len(edges[name]) + 1


def _counts(codes: np.ndarray, n_levels: int) -> np.ndarray:
    return np.bincount(codes + 1, minlength=n_levels + 1)


def _roc_from_counts(counts_o: np.ndarray, counts_s: np.ndarray,
                     n_o: int, n_s: int) -> float:
    """Mean cell ratio over cells occupied in at least one table."""
    width = max(len(counts_o), len(counts_s))
    co = np.pad(counts_o, (0, width - len(counts_o)))
    cs = np.pad(counts_s, (0, width - len(counts_s)))
    occupied = (co > 0) | (cs > 0)
    po = co[occupied] / n_o
    ps = cs[occupied] / n_s
    lo = np.minimum(po, ps)
    hi = np.maximum(po, ps)
    ratios = np.where(lo == hi, 1.0, np.divide(lo, hi, out=np.zeros_like(lo), where=hi > 0))
    return float(np.mean(ratios))


def roc_univariate(original: MicroTable, synth: MicroTable, variables,
                   numeric_binning: Mapping | None = None) -> float:
    if not variables:
        raise ConfigError("tabulation variable list is empty")
    if synth.n_rows == 0:
        raise EmptySynth("synthetic table is empty")
    edges = _resolve_edges(original, variables, numeric_binning)
    scores = []
    for name in variables:
        co, ko = _tab_codes(original, name, edges)
        cs, ks = _tab_codes(synth, name, edges)
        k = max(ko, ks)
        scores.append(_roc_from_counts(_counts(co, k), _counts(cs, k),
                                       original.n_rows, synth.n_rows))
    return float(np.mean(scores))


def roc_bivariate(original: MicroTable, synth: MicroTable, variables,
                  numeric_binning: Mapping | None = None) -> float:
    if len(variables) < 2:
        raise ConfigError("bivariate tabulation needs at least 2 variables")
    if synth.n_rows == 0:
        raise EmptySynth("synthetic table is empty")
    edges = _resolve_edges(original, variables, numeric_binning)
    coded_o = {v: _tab_codes(original, v, edges) for v in variables}
    coded_s = {v: _tab_codes(synth, v, edges) for v in variables}
    scores = []
    for a, b in combinations(variables, 2):
        ca_o, ka_o = coded_o[a]
        cb_o, kb_o = coded_o[b]
        ca_s, ka_s = coded_s[a]
        cb_s, kb_s = coded_s[b]
        ka = max(ka_o, ka_s)
        kb = max(kb_o, kb_s)
        ids_o = (ca_o + 1) * (kb + 1) + (cb_o + 1)
        ids_s = (ca_s + 1) * (kb + 1) + (cb_s + 1)
        size = (ka + 1) * (kb + 1)
        scores.append(_roc_from_counts(
            np.bincount(ids_o, minlength=size), np.bincount(ids_s, minlength=size),
            original.n_rows, synth.n_rows))
    return float(np.mean(scores))


# -- logistic regression ------------------------------------------------------

def _loglik(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(X: np.ndarray, y: np.ndarray, tol: float = 1e-8,
                 max_iter: int = 50, term_names: tuple[str, ...] = ()) -> FitResult:
    """Newton (IRLS) maximisation of the Bernoulli log-likelihood.

    ``X`` must already contain the intercept column.  Convergence is reached
    when the score (gradient) has max absolute component below ``tol``;
    standard errors come from the inverse observed information.  Separated or
    degenerate data, for which the maximum does not exist, raises
    :class:`SeparationError`.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n <= p:
        raise RankDeficient(f"{n} rows cannot identify {p} terms")
    if np.linalg.matrix_rank(X) < p:
        raise RankDeficient("design matrix is rank deficient")
    total = y.sum()
    if total == 0 or total == n:
        raise SeparationError("binary target is constant")

    beta = np.zeros(p)
    ll = _loglik(X, y, beta)
    iterations = 0
    converged = False
    for _ in range(max_iter):
        mu = expit(X @ beta)
        score = X.T @ (y - mu)
        if np.max(np.abs(score)) < tol:
            if np.max(np.abs(y - mu)) < _PERFECT_FIT_RESIDUAL:
                raise SeparationError("perfect fit: data are separated")
            converged = True
            break
        w = mu * (1.0 - mu)
        info = (X * w[:, None]).T @ X
        try:
            delta = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise SingularInformation("information matrix is singular") from None
        # halve genuinely bad steps, but accept noise-level "decreases" so the
        # final Newton steps near the optimum are not rejected
        noise = 1e-10 * (abs(ll) + 1.0)
        step = 1.0
        cand = beta + delta
        for _ in range(30):
            cand = beta + step * delta
            if _loglik(X, y, cand) >= ll - noise:
                break
            step *= 0.5
        beta = cand
        ll = _loglik(X, y, beta)
        iterations += 1
        if np.max(np.abs(beta)) > _BETA_DIVERGENCE:
            raise SeparationError("coefficients diverging: data are separated")
    if not converged:
        raise SeparationError(f"no convergence in {max_iter} iterations")

    mu = expit(X @ beta)
    w = mu * (1.0 - mu)
    info = (X * w[:, None]).T @ X
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise SingularInformation("information matrix is singular at the optimum") from None
    variances = np.diag(cov)
    if np.any(variances <= 0):
        raise SingularInformation("non-positive variance estimate")
    return FitResult(beta, np.sqrt(variances), True, iterations, tuple(term_names))


def ci_overlap(orig: ConfidenceInterval, synth: ConfidenceInterval) -> float:
    """Symmetrised interval-overlap measure; 1 for identical intervals,
    negative when the intervals are disjoint."""
    if orig.width <= 0 or synth.width <= 0:
        raise ZeroWidthInterval("confidence interval has zero width")
    inter = min(orig.upper, synth.upper) - max(orig.lower, synth.lower)
    return 0.5 * (inter / orig.width + inter / synth.width)


# -- design construction ------------------------------------------------------

def _level_label(table_a: MicroTable, table_b: MicroTable, var: str, code: int) -> str:
    if code == MISSING_CODE:
        return "Missing"
    for t in (table_a, table_b):
        cats = t.schema.var(var).categories
        if code < len(cats):
            return cats[code]
    return f"#{code}"


def _binary_target(table: MicroTable, spec: RegressionSpec) -> np.ndarray:
    tspec = table.schema.var(spec.target)
    if not tspec.is_categorical:
        raise NotCategorical(f"{spec.target} is numeric; binarisation needs categories")
    pos = [tspec.categories.index(c) for c in spec.positive if c in tspec.categories]
    return np.isin(table.column(spec.target), pos).astype(np.float64)


def aligned_designs(original: MicroTable, synth: MicroTable, spec: RegressionSpec):
    """Design matrices with identical term sets for the two tables.

    Categorical levels occupied in at least one table enter the union; the
    reference level is the original's most frequent level among those present
    in both tables.  A term whose column would be all-zero in either table
    (level absent there, or constant numeric) would make that fit singular,
    so it is dropped from both designs with a logged warning.
    """
    cols_o: list[np.ndarray] = [np.ones(original.n_rows)]
    cols_s: list[np.ndarray] = [np.ones(synth.n_rows)]
    names = ["intercept"]
    dropped: list[str] = []
    for pred in spec.predictors:
        pspec = original.schema.var(pred)
        if pspec.is_categorical != (pred not in spec.numeric_predictors):
            raise ConfigError(f"{spec.name}: {pred} kind disagrees with numeric_predictors")
        if not pspec.is_categorical:
            vo = original.column(pred)
            vs = synth.column(pred)
            if np.isnan(vo).any() or np.isnan(vs).any():
                raise NotCategorical(
                    f"{pred}: numeric predictor has missing values; bin or impute it upstream")
            if vo.min() == vo.max() or vs.min() == vs.max():
                dropped.append(pred)
                continue
            cols_o.append(vo.astype(np.float64))
            cols_s.append(vs.astype(np.float64))
            names.append(pred)
            continue
        codes_o = original.column(pred)
        codes_s = synth.column(pred)
        card = max(pspec.n_categories, synth.schema.var(pred).n_categories)
        counts_o = np.bincount(codes_o + 1, minlength=card + 1)
        counts_s = np.bincount(codes_s + 1, minlength=card + 1)
        both = (counts_o > 0) & (counts_s > 0)
        union = (counts_o > 0) | (counts_s > 0)
        if not both.any():
            dropped.append(pred)
            continue
        ref = int(np.argmax(np.where(both, counts_o, -1)))
        for idx in np.flatnonzero(union):
            if idx == ref:
                continue
            code = int(idx) - 1
            label = f"{pred}={_level_label(original, synth, pred, code)}"
            if not both[idx]:
                dropped.append(label)
                continue
            cols_o.append((codes_o == code).astype(np.float64))
            cols_s.append((codes_s == code).astype(np.float64))
            names.append(label)
    if dropped:
        logger.warning("%s: dropped terms absent or constant in one table: %s",
                       spec.name, ", ".join(dropped))
    return (np.column_stack(cols_o), np.column_stack(cols_s),
            tuple(names), tuple(dropped))


def cio_details(original: MicroTable, synth: MicroTable,
                specs: Sequence[RegressionSpec]):
    """Score plus per-coefficient interval diagnostics.

    Per model, the score is the mean over coefficients (intercept included)
    of the overlap clamped at zero; the final score is the mean over models.
    Fit failures propagate, annotated with the model and table.
    """
    if not specs:
        raise ConfigError("at least one regression specification is required")
    if synth.n_rows == 0:
        raise EmptySynth("synthetic table is empty")
    model_scores = []
    rows = []
    for rspec in specs:
        X_o, X_s, names, _ = aligned_designs(original, synth, rspec)
        y_o = _binary_target(original, rspec)
        y_s = _binary_target(synth, rspec)
        try:
            fit_o = fit_logistic(X_o, y_o, term_names=names)
        except MetricError as e:
            raise type(e)(f"model {rspec.name!r} on original table: {e}") from None
        try:
            fit_s = fit_logistic(X_s, y_s, term_names=names)
        except MetricError as e:
            raise type(e)(f"model {rspec.name!r} on synthetic table: {e}") from None
        clamped = []
        for j, term in enumerate(names):
            c_o = fit_o.interval(j)
            c_s = fit_s.interval(j)
            raw = ci_overlap(c_o, c_s)
            clamped.append(max(0.0, raw))
            rows.append({
                "model": rspec.name, "term": term,
                "orig_lower": c_o.lower, "orig_upper": c_o.upper,
                "synth_lower": c_s.lower, "synth_upper": c_s.upper,
                "overlap": raw, "clamped": max(0.0, raw),
            })
        model_scores.append(float(np.mean(clamped)))
    return float(np.mean(model_scores)), rows


def cio_score(original: MicroTable, synth: MicroTable,
              specs: Sequence[RegressionSpec]) -> float:
    score, _ = cio_details(original, synth, specs)
    return score


# -- overall score with original-side caching ---------------------------------

class UtilityState:
    """Original-side precomputation reused across many synthetic tables.

    Caches the binning edges, the original tabulation counts, and the
    original-table regression fits keyed by the aligned term set (the term
    set can change when rare levels are absent from a compared table).
    """

    def __init__(self, original: MicroTable, cfg: "EvaluationConfig"):
        self.original = original
        self.cfg = cfg
        self.edges = _resolve_edges(original, cfg.roc_variables, cfg.roc_numeric_bins)
        self._codes = {v: _tab_codes(original, v, self.edges) for v in cfg.roc_variables}
        self._uni_counts = {v: _counts(c, k) for v, (c, k) in self._codes.items()}
        self._pair_cache: dict = {}
        self._fit_cache: dict = {}

    def _pair_counts(self, a, b, ka, kb) -> np.ndarray:
        key = (a, b, ka, kb)
        hit = self._pair_cache.get(key)
        if hit is None:
            ca, cb = self._codes[a][0], self._codes[b][0]
            hit = np.bincount((ca + 1) * (kb + 1) + (cb + 1), minlength=(ka + 1) * (kb + 1))
            self._pair_cache[key] = hit
        return hit

    def _fit_original(self, rspec: RegressionSpec, X_o, names) -> FitResult:
        key = (rspec.name, names)
        hit = self._fit_cache.get(key)
        if hit is None:
            y_o = _binary_target(self.original, rspec)
            try:
                hit = fit_logistic(X_o, y_o, term_names=names)
            except MetricError as e:
                raise type(e)(f"model {rspec.name!r} on original table: {e}") from None
            self._fit_cache[key] = hit
        return hit

    def _cio(self, synth: MicroTable) -> float:
        model_scores = []
        for rspec in self.cfg.regressions:
            X_o, X_s, names, _ = aligned_designs(self.original, synth, rspec)
            fit_o = self._fit_original(rspec, X_o, names)
            try:
                fit_s = fit_logistic(X_s, _binary_target(synth, rspec), term_names=names)
            except MetricError as e:
                raise type(e)(f"model {rspec.name!r} on synthetic table: {e}") from None
            clamped = [max(0.0, ci_overlap(fit_o.interval(j), fit_s.interval(j)))
                       for j in range(len(names))]
            model_scores.append(float(np.mean(clamped)))
        return float(np.mean(model_scores))

    def evaluate(self, synth: MicroTable) -> UtilityScore:
        if synth.n_rows == 0:
            raise EmptySynth("synthetic table is empty")
        cfg = self.cfg
        uni_scores = []
        coded_s = {}
        for v in cfg.roc_variables:
            cs, ks = _tab_codes(synth, v, self.edges)
            coded_s[v] = (cs, ks)
            k = max(self._codes[v][1], ks)
            uni_scores.append(_roc_from_counts(
                np.pad(self._uni_counts[v], (0, k + 1 - len(self._uni_counts[v]))),
                _counts(cs, k), self.original.n_rows, synth.n_rows))
        roc_uni = float(np.mean(uni_scores))

        bi_scores = []
        for a, b in combinations(cfg.roc_variables, 2):
            ka = max(self._codes[a][1], coded_s[a][1])
            kb = max(self._codes[b][1], coded_s[b][1])
            ids_s = (coded_s[a][0] + 1) * (kb + 1) + (coded_s[b][0] + 1)
            size = (ka + 1) * (kb + 1)
            bi_scores.append(_roc_from_counts(
                self._pair_counts(a, b, ka, kb), np.bincount(ids_s, minlength=size),
                self.original.n_rows, synth.n_rows))
        roc_bi = float(np.mean(bi_scores))

        try:
            cio = self._cio(synth)
        except MetricError:
            if cfg.cio_on_failure != "zero":
                raise
            logger.warning("regression fit failed; scoring interval overlap as 0")
            cio = 0.0
        overall = combine_utility(roc_uni, roc_bi, cio, cfg.utility_weights)
        return UtilityScore(roc_uni, roc_bi, cio, overall)


def overall_utility(original: MicroTable, synth: MicroTable,
                    cfg: "EvaluationConfig") -> UtilityScore:
    """Utility bundle of one synthetic table against the original."""
    return UtilityState(original, cfg).evaluate(synth)
