import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfequiv import (
    DEFAULT_FRACTIONS,
    FractionGrid,
    ReplicatePlan,
    draw_sample,
    replicate_seeds,
)
from sfequiv.data_model import CATEGORICAL, NUMERIC
from sfequiv.errors import ConfigError, EmptyTable
from sfequiv.sampling import CurvePoint, RUCurve, build_curve, read_curve_csv, write_curve_csv

from .conftest import fixture_config, make_table


def _row_multiset(table):
    return sorted(zip(*(c.tolist() for c in table.columns)))


class TestDrawSample:
    def test_full_fraction_is_permutation(self, population):
        s = draw_sample(population, 1.0, seed=3)
        assert s.n_rows == population.n_rows
        assert _row_multiset(s) == _row_multiset(population)

    def test_count_arithmetic(self, population):
        s = draw_sample(population, 0.01, seed=3)
        assert s.n_rows == 100
        # all rows distinct original rows
        rows = set(zip(*(c.tolist() for c in s.columns)))
        assert len(rows) >= s.n_rows * 0.95  # duplicates only if original has them

    def test_deterministic(self, population):
        a = draw_sample(population, 0.05, seed=11)
        b = draw_sample(population, 0.05, seed=11)
        assert _row_multiset(a) == _row_multiset(b)

    def test_minimum_one_row(self):
        t = make_table([("v", CATEGORICAL, ("A",)), ("x", NUMERIC, None)],
                       [{"v": "A", "x": 1.0}] * 3)
        assert draw_sample(t, 0.0001, seed=0).n_rows == 1

    def test_fraction_validation(self, population):
        with pytest.raises(ConfigError):
            draw_sample(population, 0.0, seed=0)
        with pytest.raises(ConfigError):
            draw_sample(population, 1.5, seed=0)

    def test_empty_table(self):
        t = make_table([("v", CATEGORICAL, ("A",)), ("x", NUMERIC, None)], [])
        with pytest.raises(EmptyTable):
            draw_sample(t, 0.5, seed=0)

    @settings(max_examples=20, deadline=None)
    @given(fraction=st.floats(0.01, 1.0), seed=st.integers(0, 2**32))
    def test_subset_property(self, fraction, seed):
        t = make_table(
            [("v", CATEGORICAL, ("A", "B", "C")), ("x", NUMERIC, None)],
            [{"v": "ABC"[i % 3], "x": float(i)} for i in range(40)])
        s = draw_sample(t, fraction, seed)
        original = _row_multiset(t)
        for row in _row_multiset(s):
            assert row in original

    def test_expected_proportions(self, population):
        # mean absolute deviation of sample vs original proportions at f=0.5
        orig = np.bincount(population.column("c3") + 1, minlength=9) / population.n_rows
        devs = []
        for seed in replicate_seeds(ReplicatePlan(replicates=100, base_seed=5), 0.5):
            s = draw_sample(population, 0.5, seed)
            props = np.bincount(s.column("c3") + 1, minlength=9) / s.n_rows
            devs.append(np.abs(props - orig).mean())
        assert float(np.mean(devs)) < 0.02


class TestReplicateSeeds:
    def test_distinct(self):
        seeds = replicate_seeds(ReplicatePlan(replicates=3, base_seed=1), 0.5)
        assert len(set(seeds)) == 3

    def test_deterministic(self):
        plan = ReplicatePlan(replicates=10, base_seed=99)
        assert replicate_seeds(plan, 0.25) == replicate_seeds(plan, 0.25)

    def test_no_collision_across_default_grid(self):
        plan = ReplicatePlan(replicates=100, base_seed=7)
        all_seeds = [s for f in DEFAULT_FRACTIONS for s in replicate_seeds(plan, f)]
        assert len(set(all_seeds)) == len(all_seeds) == 2200


class TestGridValidation:
    def test_default_grid(self):
        grid = FractionGrid()
        assert len(grid.fractions) == 22
        assert grid.fractions[0] == 0.001 and grid.fractions[-1] == 0.99

    def test_rejects_zero(self):
        with pytest.raises(ConfigError):
            FractionGrid((0.0, 0.5))

    def test_rejects_non_increasing(self):
        with pytest.raises(ConfigError):
            FractionGrid((0.5, 0.5))


@pytest.fixture(scope="module")
def small_curve(population):
    cfg = fixture_config(population.schema)
    grid = FractionGrid((0.02, 0.2, 0.8))
    plan = ReplicatePlan(replicates=3, base_seed=123)
    return build_curve(population, grid, plan, cfg, keep_replicates=True)


class TestBuildCurve:
    def test_points_and_terminal(self, small_curve):
        fractions = [p.fraction for p in small_curve.points]
        assert fractions == [0.02, 0.2, 0.8, 1.0]
        terminal = small_curve.points[-1]
        assert terminal.mean_utility == 1.0 and terminal.mean_risk == 1.0
        assert terminal.n_replicates == 0

    def test_grid_with_one_is_its_own_terminal(self, population):
        cfg = fixture_config(population.schema)
        curve = build_curve(population, FractionGrid((1.0,)),
                            ReplicatePlan(replicates=1, base_seed=5), cfg)
        assert len(curve.points) == 1
        p = curve.points[0]
        assert abs(p.mean_utility - 1.0) <= 1e-9
        assert abs(p.mean_risk - 1.0) <= 1e-9

    def test_deterministic(self, population, small_curve):
        cfg = fixture_config(population.schema)
        again = build_curve(population, FractionGrid((0.02, 0.2, 0.8)),
                            ReplicatePlan(replicates=3, base_seed=123), cfg,
                            keep_replicates=True)
        assert again == small_curve

    def test_sd_over_exactly_r_values(self, small_curve):
        for point in small_curve.points[:-1]:
            reps = [u for f, u, r in small_curve.replicate_scores
                    if f == point.fraction]
            assert len(reps) == 3 == point.n_replicates
            assert point.mean_utility == pytest.approx(np.mean(reps), abs=0)
            assert point.sd_utility == pytest.approx(np.std(reps, ddof=1), abs=0)

    def test_parallel_matches_serial(self, population, small_curve):
        cfg = fixture_config(population.schema)
        parallel = build_curve(population, FractionGrid((0.02, 0.2, 0.8)),
                               ReplicatePlan(replicates=3, base_seed=123), cfg,
                               jobs=2, keep_replicates=True)
        assert parallel == small_curve


class TestCurveCsv:
    def test_round_trip_exact(self, small_curve, tmp_path):
        path = tmp_path / "curve.csv"
        write_curve_csv(small_curve, path)
        back = read_curve_csv(path)
        assert back.points == small_curve.points

    def test_sorted_on_construction(self):
        a = CurvePoint(0.5, 0.9, 0.0, 0.9, 0.0, 1)
        b = CurvePoint(0.1, 0.4, 0.0, 0.3, 0.0, 1)
        curve = RUCurve((a, b))
        assert [p.fraction for p in curve.points] == [0.1, 0.5]
