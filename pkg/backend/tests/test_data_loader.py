"""Tests for reading outcome/exposure/covariate tables from CSV."""

from io import StringIO

import numpy as np
import pytest

from data_loader import DatasetLoader
from errors import DatasetError
from tests.conftest import two_group_csv_text


@pytest.fixture
def loader():
    return DatasetLoader()


class TestReadCsv:
    def test_reads_every_cell_as_text(self, loader):
        frame = loader.read_csv(StringIO("y,a\n1,0\n0,1\n"))
        assert list(frame.columns) == ["y", "a"]
        assert frame["y"].tolist() == ["1", "0"]

    def test_strips_header_whitespace(self, loader):
        frame = loader.read_csv(StringIO(" y , a \n1,0\n"))
        assert list(frame.columns) == ["y", "a"]

    def test_header_only(self, loader):
        with pytest.raises(DatasetError, match="no data rows"):
            loader.read_csv(StringIO("y,a\n"))

    def test_empty_file(self, loader):
        with pytest.raises(DatasetError, match="could not parse CSV"):
            loader.read_csv(StringIO(""))

    def test_ragged_rows(self, loader):
        with pytest.raises(DatasetError, match="could not parse CSV"):
            loader.read_csv(StringIO("y,a\n1,0\n0,1,5,7\n"))


class TestBuildDataset:
    def test_two_group_file(self, loader, two_group_csv):
        data = loader.load(two_group_csv, "y", "a")
        assert data.n_rows == 320
        assert data.outcome.sum() == 120
        assert data.exposure_name == "a"
        assert data.column_names == ["intercept", "a"]

    def test_covariates_keep_their_order(self, loader):
        text = "y,a,age,bmi\n1,0,50,22.5\n0,1,40,30.1\n1,1,61,27\n"
        data = loader.load(StringIO(text), "y", "a", ["bmi", "age"])
        assert data.covariate_names == ["bmi", "age"]
        np.testing.assert_array_equal(data.covariates[:, 1], [50.0, 40.0, 61.0])

    def test_intercept_only(self, loader):
        data = loader.load(StringIO("y\n1\n0\n"), "y", None)
        assert data.exposure is None
        assert data.column_names == ["intercept"]

    def test_non_numeric_cell_names_column_and_line(self, loader):
        text = "y,a,age\n1,0,50\n0,1,unknown\n"
        with pytest.raises(DatasetError, match="column 'age'.*'unknown' on line 3"):
            loader.load(StringIO(text), "y", "a", ["age"])

    def test_blank_cell_is_rejected(self, loader):
        with pytest.raises(DatasetError, match="column 'a'.*line 2"):
            loader.load(StringIO("y,a\n1,\n0,1\n"), "y", "a")

    def test_missing_column(self, loader):
        with pytest.raises(DatasetError, match="column 'exposed' not found"):
            loader.load(StringIO("y,a\n1,0\n"), "y", "exposed")

    def test_duplicate_columns(self, loader):
        with pytest.raises(DatasetError, match="more than once: a"):
            loader.load(StringIO("y,a\n1,0\n"), "y", "a", ["a"])

    def test_outcome_must_be_binary(self, loader):
        with pytest.raises(DatasetError, match="outcome must contain only 0/1"):
            loader.load(StringIO("y,a\n2,0\n0,1\n"), "y", "a")

    def test_exposure_must_be_binary(self, loader):
        with pytest.raises(DatasetError, match="exposure must contain only 0/1"):
            loader.load(StringIO("y,a\n1,0.5\n0,1\n"), "y", "a")


class TestWriteCsv:
    def test_written_file_loads_back(self, loader, tmp_path):
        original = loader.load(StringIO(two_group_csv_text(10, 3, 12, 7)), "y", "a")
        path = tmp_path / "sample.csv"
        loader.write_csv(original, path)

        assert path.read_text(encoding="utf-8").splitlines()[0] == "y,a"
        reloaded = loader.load(path, "y", "a")
        np.testing.assert_array_equal(reloaded.outcome, original.outcome)
        np.testing.assert_array_equal(reloaded.exposure, original.exposure)
