import math

import pytest

from src.core.exceptions import SummaryError
from src.models.experiment import TrialRecord
from src.services.summary_service import SUMMARY_COLUMNS, summarize


def records(method, coverages, sizes):
    return [
        TrialRecord(method=method, trial=t, coverage=c, avg_size=s)
        for t, (c, s) in enumerate(zip(coverages, sizes))
    ]


def test_means_and_ratios():
    summary = summarize(records("cola-e", [0.8, 0.9], [1.0, 3.0]) + records("efcp", [0.9, 0.9], [4.0, 4.0]))
    assert list(summary.columns) == SUMMARY_COLUMNS
    rows = summary.set_index("method")
    assert rows.loc["cola-e", "coverage_mean"] == pytest.approx(0.85)
    assert rows.loc["cola-e", "coverage_se"] == pytest.approx(0.05)
    assert rows.loc["cola-e", "size_ratio"] == pytest.approx(1.0)
    assert rows.loc["efcp", "size_ratio"] == pytest.approx(2.0)
    assert rows.loc["efcp", "size_se"] == 0.0
    assert not rows["ratio_flag"].any()


def test_single_trial_has_zero_standard_error():
    summary = summarize(records("cola-e", [0.9], [2.0]))
    assert summary.loc[0, "coverage_se"] == 0.0
    assert summary.loc[0, "trials"] == 1


def test_infinite_sizes_are_flagged():
    summary = summarize(records("cola-e", [0.9], [2.0]) + records("majority", [1.0], [math.inf]))
    rows = summary.set_index("method")
    assert rows.loc["majority", "ratio_flag"]
    assert rows.loc["majority", "size_ratio"] == math.inf
    assert not rows.loc["cola-e", "ratio_flag"]


def test_other_reference():
    summary = summarize(records("cola-e", [0.9], [2.0]) + records("vfcp", [0.9], [4.0]), reference="vfcp")
    assert summary.set_index("method").loc["cola-e", "size_ratio"] == pytest.approx(0.5)


def test_no_records():
    with pytest.raises(SummaryError):
        summarize([])


def test_missing_reference():
    with pytest.raises(SummaryError):
        summarize(records("efcp", [0.9], [1.0]))


def test_zero_reference_size_gives_flagged_nan():
    summary = summarize(records("cola-e", [0.0, 0.0], [0.0, 0.0]) + records("efcp", [0.9], [2.0]))
    rows = summary.set_index("method")
    assert math.isnan(rows.loc["efcp", "size_ratio"])
    assert math.isnan(rows.loc["cola-e", "size_ratio"])
    assert rows["ratio_flag"].all()
