"""Locating synthetic scores on the sample reference curve.

A synthetic dataset's mean utility (or mean risk) is bracketed between two
adjacent grid fractions of the reference curve, scanning fractions in
increasing order and reporting the first adjacent pair whose means enclose
the value.  Values below every curve mean report an open interval below the
smallest fraction; a value equal to a grid mean (within 1e-9) reports that
fraction exactly.  Non-monotone stretches (sampling noise at tiny fractions)
are handled by the first-bracket rule rather than smoothing, keeping the
report reproducible and as coarse as the grid, which is the granularity the
method is meant to communicate.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

from .errors import DataError, EmptyCurve, EmptyScores, MetricError
from .risk import RiskScore
from .sampling import RUCurve, TERMINAL_POINT
from .utility import UtilityScore

EXACT_TOLERANCE = 1e-9


def format_fraction(f: float) -> str:
    return f"{f * 100:g}%"


@dataclass(frozen=True)
class FractionInterval:
    """Bracketing grid fractions; ``lower`` of None means below the grid,
    ``exact`` set means the value coincided with a grid point."""

    lower: float | None
    upper: float
    exact: float | None = None

    def __post_init__(self):
        if self.exact is None and self.lower is not None and self.lower >= self.upper:
            raise MetricError("interval endpoints out of order")

    def format(self) -> str:
        if self.exact is not None:
            return f"exact {format_fraction(self.exact)}"
        if self.lower is None:
            return f"<{format_fraction(self.upper)}"
        return f"{format_fraction(self.lower)} - {format_fraction(self.upper)}"


@dataclass(frozen=True)
class EquivalenceResult:
    utility_interval: FractionInterval
    risk_interval: FractionInterval


def _axis_means(curve: RUCurve, axis: str) -> list[tuple[float, float]]:
    if axis not in ("utility", "risk"):
        raise MetricError(f"unknown axis {axis!r}")
    pts = list(curve.points)
    if pts[-1].fraction < 1.0:
        pts.append(TERMINAL_POINT)
    attr = "mean_utility" if axis == "utility" else "mean_risk"
    return [(p.fraction, getattr(p, attr)) for p in pts]


def locate_on_curve(value: float, curve: RUCurve, axis: str) -> FractionInterval:
    """Bracket ``value`` between adjacent grid fractions on the chosen axis."""
    if not curve.points:
        raise EmptyCurve("curve has no points")
    means = _axis_means(curve, axis)
    for f, m in means:
        if abs(m - value) <= EXACT_TOLERANCE:
            return FractionInterval(f, f, exact=f)
    for (f_lo, m_lo), (f_hi, m_hi) in zip(means, means[1:]):
        if m_lo <= value <= m_hi:
            return FractionInterval(f_lo, f_hi)
    if value < min(m for _, m in means):
        return FractionInterval(None, means[0][0])
    # above every mean: only reachable for values beyond the terminal anchor
    if len(means) < 2:
        return FractionInterval(means[0][0], means[0][0], exact=means[0][0])
    return FractionInterval(means[-2][0], means[-1][0])


def equivalence(scores: Sequence[tuple[UtilityScore, RiskScore]],
                curve: RUCurve) -> EquivalenceResult:
    """Average the replicate scores, then locate each mean on the curve."""
    if not scores:
        raise EmptyScores("no synthetic scores to average")
    mean_u = sum(u.overall for u, _ in scores) / len(scores)
    mean_r = sum(r.marginal for _, r in scores) / len(scores)
    return EquivalenceResult(
        locate_on_curve(mean_u, curve, "utility"),
        locate_on_curve(mean_r, curve, "risk"))


REPORT_HEADER = ("label", "overall_utility", "marginal_tcap",
                 "sample_equiv_utility", "sample_equiv_risk")


def write_report_csv(rows: Sequence[dict], path) -> None:
    """Equivalence report, one row per synthesizer."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for row in rows:
            writer.writerow([row["label"], repr(float(row["overall_utility"])),
                             repr(float(row["marginal_tcap"])),
                             row["sample_equiv_utility"], row["sample_equiv_risk"]])


def read_report_csv(path) -> list[dict]:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DataError(f"report file not found: {path}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(REPORT_HEADER) <= set(reader.fieldnames):
            raise DataError(f"{path}: expected columns {REPORT_HEADER}")
        return list(reader)
