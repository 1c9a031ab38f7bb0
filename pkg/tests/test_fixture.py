import numpy as np
import pytest

from sfequiv import PopulationSpec, cramers_v, generate_population, mean_cramers_v
from sfequiv.data_model import MISSING_CODE
from sfequiv.errors import ConfigError
from sfequiv.fixture import write_fixture


class TestGeneration:
    def test_deterministic(self):
        spec = PopulationSpec(rows=500)
        a = generate_population(spec, seed=3)
        b = generate_population(spec, seed=3)
        assert all(np.array_equal(x, y) for x, y in zip(a.columns, b.columns))

    def test_shape(self):
        spec = PopulationSpec(rows=123, cardinalities=(3, 4), numeric_vars=1)
        t = generate_population(spec, seed=0)
        assert t.n_rows == 123
        assert t.schema.names == ("c1", "c2", "n1")

    def test_high_dependence_association(self, population):
        assert mean_cramers_v(population) > 0.3

    def test_zero_dependence_independence(self, independent_population):
        assert mean_cramers_v(independent_population) < 0.05

    def test_missing_rate(self):
        spec = PopulationSpec(rows=4000, missing_rate=0.1)
        t = generate_population(spec, seed=1)
        share = float((t.column("c1") == MISSING_CODE).mean())
        assert 0.05 < share < 0.15

    def test_validation(self):
        with pytest.raises(ConfigError):
            PopulationSpec(rows=0)
        with pytest.raises(ConfigError):
            PopulationSpec(dependence=1.5)
        with pytest.raises(ConfigError):
            PopulationSpec(cardinalities=(1, 2))


class TestCramersV:
    def test_perfect_association(self):
        from .conftest import make_table
        from sfequiv.data_model import CATEGORICAL

        rows = [{"a": "A", "b": "X"}] * 50 + [{"a": "B", "b": "Y"}] * 50
        t = make_table([("a", CATEGORICAL, ("A", "B")),
                        ("b", CATEGORICAL, ("X", "Y"))], rows)
        assert cramers_v(t, "a", "b") == pytest.approx(1.0)

    def test_independent_columns_near_zero(self):
        from .conftest import make_table
        from sfequiv.data_model import CATEGORICAL

        rng = np.random.default_rng(0)
        rows = [{"a": "AB"[rng.integers(2)], "b": "XY"[rng.integers(2)]}
                for _ in range(5000)]
        t = make_table([("a", CATEGORICAL, ("A", "B")),
                        ("b", CATEGORICAL, ("X", "Y"))], rows)
        assert cramers_v(t, "a", "b") < 0.05


class TestWriteFixture:
    def test_files_written_and_reloadable(self, tmp_path):
        from sfequiv import load_csv, read_schema

        csv_path, schema_path = write_fixture(PopulationSpec(rows=50), 9, tmp_path)
        schema = read_schema(schema_path)
        table = load_csv(csv_path, schema)
        assert table.n_rows == 50

    def test_identical_given_seed(self, tmp_path):
        spec = PopulationSpec(rows=80)
        a, _ = write_fixture(spec, 5, tmp_path / "one")
        b, _ = write_fixture(spec, 5, tmp_path / "two")
        assert a.read_bytes() == b.read_bytes()
