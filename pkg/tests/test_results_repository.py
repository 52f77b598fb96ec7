import math

import numpy as np
import pytest

from src.core.exceptions import DataError, InvalidInputError, ParseError
from src.models.experiment import ConditionalRecord, TrialRecord
from src.repositories.results_repository import (
    ConditionalResultsRepository,
    ingest_scores_csv,
    read_results_csv,
    write_results_csv,
)


def write_text(tmp_path, text, name="scores.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def record(method="cola-e", trial=0, coverage=0.85, avg_size=1.5, alloc="8/0"):
    return TrialRecord(method=method, trial=trial, coverage=coverage, avg_size=avg_size, alloc=alloc)


class TestIngestScores:
    def test_plain_matrix(self, tmp_path):
        scores = ingest_scores_csv(write_text(tmp_path, "s1,s2\n1,2\n3,4\n5,6\n"))
        assert scores.matrix.values.shape == (3, 2)
        assert scores.matrix.names == ("s1", "s2")
        assert scores.labels is None and scores.centers is None

    def test_labels_and_centers(self, tmp_path):
        scores = ingest_scores_csv(write_text(tmp_path, "s1,s2,y,c1,c2\n1,2,0.5,0,1\n3,4,-1,2,3\n"))
        np.testing.assert_array_equal(scores.labels, [0.5, -1.0])
        np.testing.assert_array_equal(scores.centers, [[0, 1], [2, 3]])

    def test_columns_are_ordered_by_index(self, tmp_path):
        scores = ingest_scores_csv(write_text(tmp_path, "s2,s1\n2,1\n"))
        assert scores.matrix.names == ("s1", "s2")
        np.testing.assert_array_equal(scores.matrix.values, [[1, 2]])

    def test_non_numeric_cell_names_its_line(self, tmp_path):
        with pytest.raises(ParseError, match="line 3") as info:
            ingest_scores_csv(write_text(tmp_path, "s1,s2\n1,2\n3,abc\n"))
        assert info.value.line == 3

    def test_nan_cell_is_rejected(self, tmp_path):
        with pytest.raises(ParseError) as info:
            ingest_scores_csv(write_text(tmp_path, "s1,s2\n1,2\n3,4\nnan,1\n"))
        assert info.value.line == 4

    def test_short_row(self, tmp_path):
        with pytest.raises(ParseError) as info:
            ingest_scores_csv(write_text(tmp_path, "s1,s2\n1,2\n3\n"))
        assert info.value.line == 3

    def test_missing_header(self, tmp_path):
        with pytest.raises(ParseError) as info:
            ingest_scores_csv(write_text(tmp_path, "1,2\n3,4\n"))
        assert info.value.line == 1

    def test_empty_file(self, tmp_path):
        with pytest.raises(ParseError):
            ingest_scores_csv(write_text(tmp_path, ""))

    def test_center_count_must_match(self, tmp_path):
        with pytest.raises(ParseError):
            ingest_scores_csv(write_text(tmp_path, "s1,s2,c1\n1,2,0\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            ingest_scores_csv(tmp_path / "absent.csv")


class TestResultsFiles:
    def test_single_record_layout(self, tmp_path):
        path = write_results_csv([record()], tmp_path / "out" / "results.csv")
        assert path.read_text() == "method,trial,coverage,avg_size,wall_ms,alloc\ncola-e,0,0.85,1.5,0,8/0\n"

    def test_infinite_size_is_written_as_inf(self, tmp_path):
        path = write_results_csv([record(method="majority", avg_size=math.inf, alloc="")], tmp_path / "r.csv")
        assert path.read_text().splitlines()[1] == "majority,0,0.85,inf,0,"

    def test_output_does_not_depend_on_record_order(self, tmp_path):
        records = [record(method=m, trial=t) for m in ("vfcp", "cola-e", "efcp") for t in (1, 0)]
        first = write_results_csv(records, tmp_path / "a.csv").read_bytes()
        second = write_results_csv(list(reversed(records)), tmp_path / "b.csv").read_bytes()
        assert first == second
        assert first.decode().splitlines()[1].startswith("cola-e,0,")

    def test_round_trip(self, tmp_path):
        records = [record(), record(method="majority", trial=1, avg_size=math.inf, alloc="")]
        path = write_results_csv(records, tmp_path / "r.csv")
        assert [r.csv_row() for r in read_results_csv(path)] == [r.csv_row() for r in records]

    def test_no_records(self, tmp_path):
        with pytest.raises(InvalidInputError):
            write_results_csv([], tmp_path / "r.csv")

    def test_invalid_row_names_its_line(self, tmp_path):
        path = write_text(
            tmp_path, "method,trial,coverage,avg_size,wall_ms,alloc\ncola-e,0,1.5,1,0,\n", "bad.csv"
        )
        with pytest.raises(ParseError) as info:
            read_results_csv(path)
        assert info.value.line == 2

    def test_missing_column(self, tmp_path):
        with pytest.raises(ParseError):
            read_results_csv(write_text(tmp_path, "method,trial\ncola-e,0\n", "bad.csv"))


def test_conditional_results_sorted_by_location(tmp_path):
    records = [
        ConditionalRecord(method="cola-l", trial=0, location=loc, coverage=0.9, size=1.25)
        for loc in (0.5, -0.5)
    ]
    repository = ConditionalResultsRepository(tmp_path / "cond.csv")
    repository.write(records)
    assert [r.location for r in repository.read()] == [-0.5, 0.5]
