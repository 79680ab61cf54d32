"""Arrival-window inference from classified busy-interval segments.

Each busy interval is partitioned, per task, into segments that contain
exactly one arrival, possibly one arrival, or none.  Folding the one /
possibly-one segments modulo the task's period accumulates a histogram
whose peak positions are the candidate arrival windows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .decompose import CountCandidates, effective_exec_time
from .model import BusyInterval, TaskSpec, Tick


class DegenerateSegmentError(ValueError):
    """A computed segment has begin > end: the candidate counts cannot be real."""


class NoArrivalEvidence(ValueError):
    """The histogram is all-zero; no interval constrained this task."""


class SegmentKind(enum.Enum):
    ZERO = "zero"
    ONE = "one"
    ZERO_OR_ONE = "zero_or_one"


@dataclass(frozen=True)
class ClassifiedSegment:
    """Closed tick range [begin, end] inside one busy interval."""

    kind: SegmentKind
    begin: Tick
    end: Tick
    interval_index: int
    slot: int

    def __post_init__(self) -> None:
        if self.begin > self.end:
            raise DegenerateSegmentError(
                f"segment [{self.begin}, {self.end}] is empty"
            )


@dataclass
class ArrivalHistogram:
    """Overlap counts of feasible arrival positions over [0, period)."""

    task_id: int
    counts: np.ndarray

    @property
    def peak(self) -> int:
        return int(self.counts.max()) if self.counts.size else 0


@dataclass(frozen=True)
class ArrivalWindow:
    """Closed range of positions modulo the period; may wrap past period-1."""

    begin: int
    end: int


def classify_segments(
    task: TaskSpec,
    interval: BusyInterval,
    cands: CountCandidates,
    interval_index: int = 0,
) -> list[ClassifiedSegment]:
    """Partition one busy interval for one task given its count candidates.

    Returns only the one / possibly-one segments; the remainder of the
    interval is implicitly arrival-free.  Segment ends are pulled in by the
    effective execution time, since no arrival can sit closer than one
    (minimal) job to the interval end.
    """
    alpha = interval.start
    beta = interval.end
    p = task.period
    c = effective_exec_time(task)
    length = interval.length
    segs: list[ClassifiedSegment] = []

    if cands.exact:
        n = cands.values[0]
        if n == 0:
            return []
        if n == -(-length // p):  # n == ceil(length / p)
            for h in range(1, n + 1):
                segs.append(
                    ClassifiedSegment(
                        SegmentKind.ONE,
                        alpha + (h - 1) * p,
                        beta - (n - h) * p - c,
                        interval_index,
                        h,
                    )
                )
        else:
            for h in range(1, n + 1):
                segs.append(
                    ClassifiedSegment(
                        SegmentKind.ONE,
                        beta - (n + 1 - h) * p,
                        alpha + h * p - c,
                        interval_index,
                        h,
                    )
                )
    else:
        n = cands.values[0]
        for h in range(1, n + 1):
            segs.append(
                ClassifiedSegment(
                    SegmentKind.ONE,
                    alpha + (h - 1) * p,
                    alpha + h * p - c,
                    interval_index,
                    h,
                )
            )
        segs.append(
            ClassifiedSegment(
                SegmentKind.ZERO_OR_ONE,
                alpha + n * p,
                beta - c,
                interval_index,
                n + 1,
            )
        )
    return segs


def accumulate_histogram(
    task: TaskSpec, segments: list[ClassifiedSegment]
) -> ArrivalHistogram:
    """Fold segments modulo the period into per-position overlap counts.

    Each busy interval contributes at most one count per position: the
    segments of one interval are translates of each other, so their
    projections largely coincide and are unioned before counting.  This
    keeps every count bounded by the number of contributing intervals.
    """
    p = task.period
    by_interval: dict[int, list[tuple[int, int]]] = {}
    for seg in segments:
        if seg.kind is SegmentKind.ZERO:
            continue
        span = seg.end - seg.begin + 1
        ranges = by_interval.setdefault(seg.interval_index, [])
        if span >= p:
            ranges.append((0, p))
        else:
            start = seg.begin % p
            stop = start + span
            if stop <= p:
                ranges.append((start, stop))
            else:
                ranges.append((start, p))
                ranges.append((0, stop - p))

    diff = np.zeros(p + 1, dtype=np.int64)
    for ranges in by_interval.values():
        ranges.sort()
        merged: list[list[int]] = []
        for b, e in ranges:
            if merged and b <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([b, e])
        for b, e in merged:
            diff[b] += 1
            diff[e] -= 1
    counts = np.cumsum(diff[:p])
    return ArrivalHistogram(task_id=task.id, counts=counts)


def candidate_arrival_windows(hist: ArrivalHistogram) -> list[ArrivalWindow]:
    """Maximal runs of peak-count positions, merged across the wrap point."""
    counts = hist.counts
    peak = counts.max() if counts.size else 0
    if peak <= 0:
        raise NoArrivalEvidence(f"task {hist.task_id}: histogram is all zero")
    p = len(counts)
    mask = counts == peak
    if mask.all():
        return [ArrivalWindow(0, p - 1)]

    runs: list[list[int]] = []
    pos = 0
    while pos < p:
        if mask[pos]:
            start = pos
            while pos < p and mask[pos]:
                pos += 1
            runs.append([start, pos - 1])
        else:
            pos += 1
    # a run touching position p-1 wraps onto a run starting at 0
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == p - 1:
        runs[-1][1] = runs[0][1]
        runs.pop(0)
    return [ArrivalWindow(b, e) for b, e in sorted(runs)]


def window_width(window: ArrivalWindow, period: int) -> int:
    """Cyclic width in positions, inclusive of both endpoints."""
    return (window.end - window.begin) % period + 1


def window_positions(window: ArrivalWindow, period: int) -> list[int]:
    w = window_width(window, period)
    return [(window.begin + i) % period for i in range(w)]
