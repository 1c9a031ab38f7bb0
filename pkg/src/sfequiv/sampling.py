"""Seeded subsampling and the sample-fraction reference curve.

For each fraction in the grid, a number of replicate samples are drawn
without replacement from the original table and scored against the full
original with exactly the pipeline used for synthetic data.  Per fraction the
mean and standard deviation of the overall utility and overall marginal risk
are recorded; the point (1.0, 1.0, 1.0) is appended as the terminal anchor
(the whole original scores 1 on both axes by construction).
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .data_model import MicroTable
from .errors import ConfigError, DataError, EmptyCurve, EmptyTable, SfequivError
from .seeds import float_token, mix_seed

if TYPE_CHECKING:  # pragma: no cover
    from .config import EvaluationConfig

# fraction grid used throughout: dense near zero, dense near one
DEFAULT_FRACTIONS = (
    0.001, 0.0025, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05,
    0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90,
    0.95, 0.96, 0.97, 0.98, 0.99,
)


@dataclass(frozen=True)
class FractionGrid:
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        object.__setattr__(self, "fractions", fr)
        if not fr:
            raise ConfigError("fraction grid is empty")
        if any(not (0.0 < f <= 1.0) for f in fr):
            raise ConfigError("fractions must lie in (0, 1]")
        if any(a >= b for a, b in zip(fr, fr[1:])):
            raise ConfigError("fractions must be strictly increasing")


@dataclass(frozen=True)
class ReplicatePlan:
    replicates: int = 100
    base_seed: int = 20220405

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    mean_utility: float
    sd_utility: float
    mean_risk: float
    sd_risk: float
    n_replicates: int


@dataclass(frozen=True)
class RUCurve:
    points: tuple[CurvePoint, ...]
    replicate_scores: tuple = ()  # optional audit trail of (fraction, utility, risk)

    def __post_init__(self):
        pts = tuple(sorted(self.points, key=lambda p: p.fraction))
        object.__setattr__(self, "points", pts)
        if not pts:
            raise EmptyCurve("curve has no points")
        fractions = [p.fraction for p in pts]
        if len(set(fractions)) != len(fractions):
            raise ConfigError("duplicate fractions in curve")


TERMINAL_POINT = CurvePoint(1.0, 1.0, 0.0, 1.0, 0.0, 0)


def draw_sample(table: MicroTable, fraction: float, seed: int) -> MicroTable:
    """Uniform sample without replacement of round(fraction * n) rows
    (at least 1); deterministic in (table, fraction, seed)."""
    if not (0.0 < fraction <= 1.0):
        raise ConfigError(f"fraction {fraction} outside (0, 1]")
    if table.n_rows == 0:
        raise EmptyTable("cannot sample an empty table")
    k = max(1, int(round(fraction * table.n_rows)))
    k = min(k, table.n_rows)
    rng = np.random.default_rng(seed)
    idx = rng.choice(table.n_rows, size=k, replace=False)
    return table.take(idx)


def replicate_seeds(plan: ReplicatePlan, fraction: float) -> list[int]:
    """Child seeds derived from (base seed, fraction bits, replicate index)."""
    token = float_token(fraction)
    return [mix_seed(plan.base_seed, token, i) for i in range(plan.replicates)]


def _summarise(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return mean, sd


_WORKER = None


def _init_worker(table, cfg):
    from .pipeline import Evaluator

    global _WORKER
    _WORKER = (table, Evaluator(table, cfg))


def _run_task(task):
    fraction, seed = task
    table, evaluator = _WORKER
    sample = draw_sample(table, fraction, seed)
    u, r = evaluator.evaluate(sample)
    return u.overall, r.marginal


def build_curve(table: MicroTable, grid: FractionGrid, plan: ReplicatePlan,
                eval_cfg: "EvaluationConfig", jobs: int = 1,
                keep_replicates: bool = False) -> RUCurve:
    """Score replicate samples at every grid fraction against the full table.

    Replicate evaluations are pure functions of (table, seed); with jobs > 1
    they run in a process pool, reduced in (fraction, replicate) order so the
    result does not depend on scheduling.  The terminal (1, 1, 1) anchor is
    appended unless the grid itself ends at 1.0, in which case that fraction's
    measured point already is the anchor.
    """
    from .pipeline import Evaluator

    tasks = [(f, s) for f in grid.fractions for s in replicate_seeds(plan, f)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(table, eval_cfg)) as pool:
            flat = list(pool.map(_run_task, tasks, chunksize=4))
    else:
        evaluator = Evaluator(table, eval_cfg)
        flat = []
        for fraction, seed in tasks:
            sample = draw_sample(table, fraction, seed)
            try:
                u, r = evaluator.evaluate(sample)
            except SfequivError as e:
                raise type(e)(f"fraction={fraction} seed={seed}: {e}") from e
            flat.append((u.overall, r.marginal))

    points = []
    audit = []
    pos = 0
    for f in grid.fractions:
        us, rs = [], []
        for _ in range(plan.replicates):
            u, r = flat[pos]
            pos += 1
            us.append(u)
            rs.append(r)
            if keep_replicates:
                audit.append((f, u, r))
        mu, su = _summarise(us)
        mr, sr = _summarise(rs)
        points.append(CurvePoint(f, mu, su, mr, sr, plan.replicates))
    if grid.fractions[-1] < 1.0:
        points.append(TERMINAL_POINT)
    return RUCurve(tuple(points), tuple(audit))


# -- curve serialisation -------------------------------------------------------

CURVE_HEADER = ("fraction", "mean_utility", "sd_utility", "mean_risk", "sd_risk",
                "n_replicates")


def write_curve_csv(curve: RUCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for p in curve.points:
            writer.writerow([repr(p.fraction), repr(p.mean_utility), repr(p.sd_utility),
                             repr(p.mean_risk), repr(p.sd_risk), p.n_replicates])


def read_curve_csv(path) -> RUCurve:
    path = Path(path)
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DataError(f"curve file not found: {path}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(CURVE_HEADER) <= set(reader.fieldnames):
            raise DataError(f"{path}: expected columns {CURVE_HEADER}")
        points = []
        for row in reader:
            try:
                points.append(CurvePoint(
                    float(row["fraction"]), float(row["mean_utility"]),
                    float(row["sd_utility"]), float(row["mean_risk"]),
                    float(row["sd_risk"]), int(row["n_replicates"])))
            except ValueError as e:
                raise DataError(f"{path}: malformed curve row: {e}") from None
    if not points:
        raise EmptyCurve(f"{path}: no curve points")
    return RUCurve(tuple(points))
