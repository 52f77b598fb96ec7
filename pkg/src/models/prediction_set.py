"""Prediction set value types"""
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterator, Tuple, Union

Interval = Tuple[float, float]


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of disjoint closed intervals.

    Instances built through ``set_service.normalize`` are sorted, pairwise
    disjoint with positive gaps and satisfy ``lo <= hi``. Endpoints may be
    infinite. The empty union has no intervals.
    """

    intervals: Tuple[Interval, ...] = ()

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def is_bounded(self) -> bool:
        return all(math.isfinite(lo) and math.isfinite(hi) for lo, hi in self.intervals)

    def __repr__(self) -> str:
        if not self.intervals:
            return "IntervalUnion(∅)"
        body = " ∪ ".join(f"[{lo:.6g}, {hi:.6g}]" for lo, hi in self.intervals)
        return f"IntervalUnion({body})"


@dataclass(frozen=True)
class DiscreteSet:
    """Finite set of integer labels"""

    labels: FrozenSet[int] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def is_empty(self) -> bool:
        return not self.labels


PredictionSet = Union[IntervalUnion, DiscreteSet]

EMPTY_INTERVALS = IntervalUnion(())
REAL_LINE = IntervalUnion(((-math.inf, math.inf),))
