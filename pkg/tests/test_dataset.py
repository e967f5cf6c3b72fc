import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from modalreg.dataset import Dataset, DesignPoint, load_csv, validate
from modalreg.errors import DataError, DimensionError, MissingColumnError, NonNumericError


@pytest.fixture
def small_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y,x\n1,2\n3,4\n5,6\n")
    return p


def test_load_with_intercept(small_csv):
    d = load_csv(small_csv, "y")
    assert (d.n, d.d) == (3, 2)
    np.testing.assert_array_equal(d.X, [[1, 2], [1, 4], [1, 6]])
    np.testing.assert_array_equal(d.y, [1, 3, 5])
    assert d.column_names == ("intercept", "x")


def test_load_without_intercept(small_csv):
    d = load_csv(small_csv, "y", add_intercept=False)
    assert d.d == 1
    np.testing.assert_array_equal(d.X, [[2], [4], [6]])


def test_non_numeric_cell_reports_location(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,x\n1,abc\n")
    with pytest.raises(NonNumericError) as info:
        load_csv(p, "y")
    assert info.value.row == 1 and info.value.column == "x"


def test_missing_response_column(small_csv):
    with pytest.raises(MissingColumnError) as info:
        load_csv(small_csv, "z")
    assert info.value.to_dict()["module"] == "dataset"


def test_too_few_rows(tmp_path):
    p = tmp_path / "short.csv"
    p.write_text("y,a,b\n1,2,3\n4,5,7\n")
    with pytest.raises(DimensionError):
        load_csv(p, "y")


def test_non_finite_rejected():
    with pytest.raises(DataError):
        Dataset.from_arrays([1.0, np.nan, 2.0], [1.0, 2.0, 3.0])


def test_intercept_flag_checked():
    with pytest.raises(DataError):
        Dataset(np.arange(3.0), np.array([[1.0, 2], [2.0, 3], [1.0, 4]]), intercept=True)


def test_design_point_rejects_non_finite():
    with pytest.raises(DataError):
        DesignPoint([1.0, np.inf])
    with pytest.raises(DimensionError):
        DesignPoint([1.0, 2.0, 3.0]).check(Dataset.from_arrays([1.0, 2.0, 3.0], [1.0, 2.0, 4.0]))


def test_validate_clean():
    d = Dataset.from_arrays([1.0, 3.0, 5.0], [2.0, 4.0, 6.0])
    assert validate(d) == []


def test_validate_repeated_rows_rank_deficient():
    d = Dataset.from_arrays([1.0, 3.0, 5.0], [2.0, 2.0, 2.0])
    codes = {g.code for g in validate(d)}
    assert "rank_deficient" in codes


def test_validate_constant_column():
    d = Dataset.from_arrays([1.0, 2.0, 3.0, 4.0], [[5.0, 1.0], [5.0, 2.0], [5.0, 4.0], [5.0, 3.0]])
    codes = [g.code for g in validate(d)]
    assert "constant_column" in codes


def test_validate_duplicates():
    d = Dataset.from_arrays([1.0, 1.0, 3.0, 4.0], [2.0, 2.0, 5.0, 1.0])
    assert "duplicate_rows" in {g.code for g in validate(d)}


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(hnp.arrays(np.float64, st.tuples(st.integers(3, 12), st.integers(1, 3)), elements=finite))
def test_csv_round_trip(tmp_path_factory, a):
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    y, X = a[:, 0], a[:, 1:]
    if X.shape[1] == 0 or X.shape[0] < X.shape[1] + 2:
        return
    d = Dataset.from_arrays(y, X, column_names=[f"c{j}" for j in range(X.shape[1])])
    d.to_csv(path, "resp")
    back = load_csv(path, "resp")
    np.testing.assert_array_equal(back.y, d.y)
    np.testing.assert_array_equal(back.X, d.X)
    assert back.column_names == d.column_names


@given(hnp.arrays(np.float64, st.tuples(st.integers(4, 10), st.just(2)), elements=finite))
def test_validate_does_not_mutate(a):
    d = Dataset.from_arrays(a[:, 0], a[:, 1])
    y0, X0 = d.y.copy(), d.X.copy()
    validate(d)
    np.testing.assert_array_equal(d.y, y0)
    np.testing.assert_array_equal(d.X, X0)
    assert not d.X.flags.writeable
