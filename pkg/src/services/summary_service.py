"""Per-method aggregation of trial records"""
import logging
from typing import Iterable

import numpy as np
import pandas as pd

from ..core.exceptions import SummaryError
from ..core.logging_config import get_event_logger
from ..models.experiment import TrialRecord

logger = logging.getLogger(__name__)
events = get_event_logger(__name__)

SUMMARY_COLUMNS = [
    "method",
    "trials",
    "coverage_mean",
    "coverage_se",
    "size_mean",
    "size_se",
    "size_ratio",
    "ratio_flag",
]


def _standard_error(values: pd.Series) -> float:
    if len(values) < 2 or not np.all(np.isfinite(values)):
        return 0.0 if len(values) < 2 else float("nan")
    return float(values.std(ddof=1) / np.sqrt(len(values)))


def summarize(records: Iterable[TrialRecord], reference: str = "cola-e") -> pd.DataFrame:
    """Means, standard errors and size ratios relative to ``reference``.

    Ratios involving an infinite mean size are reported as ``inf`` and flagged.
    A zero reference size gives flagged ``nan`` ratios.
    """
    frame = pd.DataFrame([r.csv_row() for r in records])
    if frame.empty:
        raise SummaryError("No records to summarize")
    if reference not in set(frame["method"]):
        raise SummaryError(f"Reference method '{reference}' is not among the records")

    grouped = frame.groupby("method", sort=True)
    summary = pd.DataFrame(
        {
            "trials": grouped.size(),
            "coverage_mean": grouped["coverage"].mean(),
            "coverage_se": grouped["coverage"].agg(_standard_error),
            "size_mean": grouped["avg_size"].mean(),
            "size_se": grouped["avg_size"].agg(_standard_error),
        }
    )

    ref_size = summary.loc[reference, "size_mean"]
    sizes = summary["size_mean"].to_numpy(dtype=float)
    infinite = ~np.isfinite(sizes) | (not np.isfinite(ref_size))
    if ref_size == 0.0:
        events.warning("zero_reference_size", reference=reference)
        ratio = np.where(infinite, np.inf, np.nan)
        flagged = np.ones_like(infinite)
    else:
        ratio = np.where(infinite, np.inf, sizes / ref_size)
        flagged = infinite
    summary["size_ratio"] = ratio
    summary["ratio_flag"] = flagged
    if infinite.any():
        logger.warning("⚠️ Infinite mean set size for: %s", ", ".join(summary.index[infinite]))

    return summary.reset_index()[SUMMARY_COLUMNS]
