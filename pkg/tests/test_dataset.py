import numpy as np
import pytest

from csgs.dataset import (
    Context,
    Dataset,
    EMPTY_CONTEXT,
    VariableSchema,
    check_context,
    full_context,
    load_csv,
    save_csv,
    unique_rows,
)
from csgs.errors import DataError


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_plain_integer_file(self, tmp_path):
        d = load_csv(write(tmp_path, "0,1\n1,0\n0,1\n"))
        assert d.schema.n == 2
        assert d.schema.arities == (2, 2)
        assert d.rows.tolist() == [[0, 1], [1, 0], [0, 1]]

    def test_constant_column_clamps_arity_to_two(self, tmp_path):
        d = load_csv(write(tmp_path, "0,1\n0,0\n"))
        assert d.schema.arities == (2, 2)

    def test_arity_is_max_code_plus_one(self, tmp_path):
        d = load_csv(write(tmp_path, "0,2\n1,0\n"))
        assert d.schema.arities == (2, 3)

    def test_header_line(self, tmp_path):
        d = load_csv(write(tmp_path, "a,b\n0,1\n1,0\n"), header=True)
        assert d.schema.names == ("a", "b")
        assert len(d) == 2

    def test_categorical_first_appearance_coding(self, tmp_path):
        d = load_csv(write(tmp_path, "yes,0\nno,1\nyes,0\nmaybe,1\n"))
        assert d.rows[:, 0].tolist() == [0, 1, 0, 2]
        assert d.schema.labels[0] == ("yes", "no", "maybe")
        assert d.schema.labels[1] is None
        assert d.schema.arities == (3, 2)

    def test_negative_numbers_fall_back_to_labels(self, tmp_path):
        d = load_csv(write(tmp_path, "-1,0\n1,1\n"))
        assert d.rows[:, 0].tolist() == [0, 1]
        assert d.schema.labels[0] == ("-1", "1")

    def test_ragged_row_names_the_row(self, tmp_path):
        with pytest.raises(DataError, match="row 2"):
            load_csv(write(tmp_path, "0,1\n0\n"))

    def test_empty_field_names_row_and_column(self, tmp_path):
        with pytest.raises(DataError, match="row 2, column 1"):
            load_csv(write(tmp_path, "0,1\n0,\n"))

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(DataError, match="empty"):
            load_csv(write(tmp_path, ""))

    def test_header_without_rows_rejected(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, "a,b\n"), header=True)


class TestRoundTrip:
    def test_integer_round_trip(self, tmp_path):
        d = load_csv(write(tmp_path, "0,1,2\n1,0,0\n0,2,1\n"))
        out = tmp_path / "out.csv"
        save_csv(d, out)
        assert load_csv(out) == d

    def test_label_round_trip_is_label_faithful(self, tmp_path):
        d = load_csv(write(tmp_path, "hot,1\ncold,0\nhot,1\n"))
        out = tmp_path / "out.csv"
        save_csv(d, out)
        assert out.read_text().splitlines()[0] == "hot,1"
        assert load_csv(out) == d

    def test_random_datasets_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        for trial in range(20):
            n = int(rng.integers(1, 6))
            rows = rng.integers(0, rng.integers(2, 5, size=n), size=(50, n))
            path = tmp_path / f"r{trial}.csv"
            np.savetxt(path, rows, fmt="%d", delimiter=",")
            d = load_csv(path)
            out = tmp_path / f"w{trial}.csv"
            save_csv(d, out, header=True)
            assert load_csv(out, header=True) == d


class TestDatasetInvariants:
    def test_rows_validated_against_schema(self):
        schema = VariableSchema(("a", "b"), (2, 2))
        with pytest.raises(DataError):
            Dataset(schema, np.array([[0, 5]]))
        with pytest.raises(DataError):
            Dataset(schema, np.array([[-1, 0]]))

    def test_empty_dataset_rejected(self):
        schema = VariableSchema(("a", "b"), (2, 2))
        with pytest.raises(DataError):
            Dataset(schema, np.zeros((0, 2), dtype=int))

    def test_rows_are_immutable(self):
        d = Dataset(VariableSchema(("a",), (2,)), np.array([[0], [1]]))
        with pytest.raises(ValueError):
            d.rows[0, 0] = 1


class TestUniqueRows:
    def test_first_appearance_order_and_multiplicities(self):
        d = Dataset(VariableSchema(("a", "b"), (2, 2)), np.array([[0, 1], [0, 1], [1, 0]]))
        got = unique_rows(d)
        assert [(c.values, m) for c, m in got] == [((0, 1), 2), ((1, 0), 1)]
        assert len(got) == 2

    def test_single_repeated_assignment(self):
        d = Dataset(VariableSchema(("a", "b"), (2, 2)), np.array([[1, 1]] * 9))
        got = unique_rows(d)
        assert len(got) == 1
        assert got[0][1] == 9

    def test_uniform_binary_m_bounded_by_joint_size(self):
        rng = np.random.default_rng(3)
        d = Dataset(
            VariableSchema(("a", "b"), (2, 2)), rng.integers(0, 2, size=(100, 2))
        )
        assert len(unique_rows(d)) <= 4

    def test_idempotent_and_mass_preserving(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            n = int(rng.integers(1, 5))
            rows = rng.integers(0, 2, size=(int(rng.integers(1, 200)), n))
            d = Dataset(VariableSchema(tuple(f"x{i}" for i in range(n)), (2,) * n), rows)
            first = unique_rows(d)
            assert sum(m for _, m in first) == len(d)
            assert len(first) <= min(len(d), d.schema.joint_size())
            again = unique_rows(d)
            assert first == again


class TestContext:
    def test_vars_must_increase(self):
        with pytest.raises(DataError):
            Context((1, 0), (0, 0))
        with pytest.raises(DataError):
            Context((0, 0), (0, 0))

    def test_restrict_full_context(self):
        ctx = full_context((1, 0, 1))
        sub = ctx.restrict({2, 0})
        assert sub.vars == (0, 2)
        assert sub.values == (1, 1)

    def test_restrict_missing_variable(self):
        with pytest.raises(DataError):
            Context((0,), (1,)).restrict({1})

    def test_check_context_against_schema(self):
        schema = VariableSchema(("a", "b"), (2, 3))
        check_context(Context((1,), (2,)), schema)
        with pytest.raises(DataError):
            check_context(Context((2,), (0,)), schema)
        with pytest.raises(DataError):
            check_context(Context((0,), (2,)), schema)

    def test_empty_context(self):
        assert len(EMPTY_CONTEXT) == 0
        assert EMPTY_CONTEXT.is_full(0)
