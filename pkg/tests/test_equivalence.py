import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfequiv import RiskScore, UtilityScore, equivalence, locate_on_curve
from sfequiv.equivalence import FractionInterval, format_fraction
from sfequiv.errors import EmptyScores
from sfequiv.sampling import CurvePoint, RUCurve


def curve_from(pairs, risk_pairs=None):
    """pairs: list of (fraction, mean_utility); risk mirrors utility unless given."""
    risk_pairs = risk_pairs or pairs
    points = tuple(
        CurvePoint(f, u, 0.0, r[1], 0.0, 10)
        for (f, u), r in zip(pairs, risk_pairs))
    return RUCurve(points)


class TestLocate:
    def test_terminal_anchor_exact(self):
        curve = curve_from([(0.1, 0.5)])
        interval = locate_on_curve(1.0, curve, "utility")
        assert interval.exact == 1.0
        assert interval.format() == "exact 100%"

    def test_below_minimum(self):
        curve = curve_from([(0.001, 0.3), (0.0025, 0.4)])
        interval = locate_on_curve(0.2, curve, "utility")
        assert interval.lower is None and interval.upper == 0.001
        assert interval.format() == "<0.1%"

    def test_bracketing(self):
        curve = curve_from([(0.001, 0.3), (0.0025, 0.4)])
        interval = locate_on_curve(0.35, curve, "utility")
        assert (interval.lower, interval.upper) == (0.001, 0.0025)
        assert interval.format() == "0.1% - 0.25%"

    def test_exact_grid_point(self):
        curve = curve_from([(0.1, 0.5), (0.2, 0.7)])
        interval = locate_on_curve(0.7, curve, "utility")
        assert interval.exact == 0.2

    def test_first_bracket_wins_on_noise(self):
        # non-monotone low end: first enclosing adjacent pair is reported
        curve = curve_from([(0.001, 0.5), (0.0025, 0.3), (0.005, 0.6)])
        interval = locate_on_curve(0.4, curve, "utility")
        assert (interval.lower, interval.upper) == (0.0025, 0.005)

    def test_risk_axis(self):
        curve = curve_from([(0.1, 0.2)], risk_pairs=[(0.1, 0.8)])
        interval = locate_on_curve(0.9, curve, "risk")
        assert (interval.lower, interval.upper) == (0.1, 1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.0, 0.99), min_size=2, max_size=8, unique=True),
           st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_monotone_on_increasing_curves(self, means, a, b):
        means = sorted(means)
        fractions = [0.01 * (i + 1) for i in range(len(means))]
        curve = curve_from(list(zip(fractions, means)))
        lo, hi = min(a, b), max(a, b)
        ia = locate_on_curve(lo, curve, "utility")
        ib = locate_on_curve(hi, curve, "utility")
        pos_a = ia.exact if ia.exact is not None else ia.upper
        pos_b = ib.exact if ib.exact is not None else ib.upper
        assert pos_a <= pos_b

    def test_insertion_order_invariant(self):
        pts = [(0.2, 0.7), (0.001, 0.1), (0.05, 0.5)]
        a = RUCurve(tuple(CurvePoint(f, u, 0, u, 0, 1) for f, u in pts))
        b = RUCurve(tuple(CurvePoint(f, u, 0, u, 0, 1) for f, u in reversed(pts)))
        assert locate_on_curve(0.6, a, "utility") == locate_on_curve(0.6, b, "utility")


def _score_pair(u, r):
    return (UtilityScore(u, u, u, u), RiskScore(r, 0.3, r, 0.5))


class TestEquivalence:
    def test_identity_scores_exact_at_one(self):
        curve = curve_from([(0.1, 0.5)])
        result = equivalence([_score_pair(1.0, 1.0)], curve)
        assert result.utility_interval.exact == 1.0
        assert result.risk_interval.exact == 1.0

    def test_table_shaped_brackets(self):
        # curve resembling the published reference: both means fall between
        # the 10% and 20% fractions
        utility = [(0.05, 0.70), (0.10, 0.748), (0.20, 0.805), (0.30, 0.837)]
        risk = [(0.05, 0.46), (0.10, 0.48), (0.20, 0.52), (0.30, 0.55)]
        curve = curve_from(utility, risk_pairs=risk)
        result = equivalence([_score_pair(0.774, 0.516)], curve)
        assert result.utility_interval.format() == "10% - 20%"
        assert result.risk_interval.format() == "10% - 20%"

    def test_replicate_averaging(self):
        curve = curve_from([(0.1, 0.2), (0.5, 0.6)])
        scores = [_score_pair(0.1, 0.1), _score_pair(0.5, 0.5)]
        result = equivalence(scores, curve)  # means 0.3
        assert (result.utility_interval.lower, result.utility_interval.upper) == (0.1, 0.5)

    def test_negative_risk_mean_below_min(self):
        curve = curve_from([(0.001, 0.1), (0.01, 0.3)])
        result = equivalence([_score_pair(0.5, -0.2)], curve)
        assert result.risk_interval.lower is None
        assert result.risk_interval.format() == "<0.1%"

    def test_empty_scores(self):
        curve = curve_from([(0.1, 0.5)])
        with pytest.raises(EmptyScores):
            equivalence([], curve)


class TestFormatting:
    @pytest.mark.parametrize("fraction,expected", [
        (0.001, "0.1%"), (0.0025, "0.25%"), (0.01, "1%"), (0.1, "10%"),
        (0.95, "95%"), (1.0, "100%"),
    ])
    def test_fraction_formatting(self, fraction, expected):
        assert format_fraction(fraction) == expected

    def test_interval_validation(self):
        with pytest.raises(Exception):
            FractionInterval(0.5, 0.2)
