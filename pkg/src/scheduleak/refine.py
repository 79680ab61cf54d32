"""Iterative elimination of ambiguous count vectors via arrival windows.

Tasks whose histogram peak is a single window project that window into
every busy interval; a projection overlapping a possibly-one segment
confirms the higher count, no overlap confirms the lower, and the pruned
vectors feed back into fresh segment, histogram, and window computation
until nothing changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .decompose import CountCandidates, JobCountVector, enumerate_matches
from .model import BusyInterval, TaskSet, TaskSpec, Tick
from .windows import (
    ArrivalHistogram,
    ArrivalWindow,
    ClassifiedSegment,
    DegenerateSegmentError,
    NoArrivalEvidence,
    SegmentKind,
    accumulate_histogram,
    candidate_arrival_windows,
    classify_segments,
)


@dataclass
class InferenceState:
    """Mutable attack-side knowledge: count vectors and arrival windows."""

    vectors: list[list[JobCountVector]]
    segments: dict[tuple[int, int], list[ClassifiedSegment]] = field(default_factory=dict)
    histograms: dict[int, ArrivalHistogram] = field(default_factory=dict)
    windows: dict[int, list[ArrivalWindow]] = field(default_factory=dict)
    iterations: int = 0
    converged: bool = False
    forced_matches: int = 0
    conflicts: int = 0
    degenerate_skips: int = 0

    def counts_for(self, task_index: int, interval_index: int) -> tuple[int, ...]:
        """Distinct surviving counts for one task in one interval."""
        return tuple(
            sorted({v.counts[task_index] for v in self.vectors[interval_index]})
        )


def build_state(taskset: TaskSet, intervals: list[BusyInterval]) -> InferenceState:
    """Decompose every interval and derive the initial windows."""
    vectors = []
    forced = 0
    for iv in intervals:
        vs = enumerate_matches(taskset, iv)
        if vs and vs[0].forced:
            forced += 1
        vectors.append(vs)
    state = InferenceState(vectors=vectors, forced_matches=forced)
    _derive(taskset, intervals, state)
    return state


def _derive(taskset: TaskSet, intervals: list[BusyInterval], state: InferenceState) -> None:
    """Recompute segments, histograms, and windows from surviving vectors."""
    state.segments = {}
    for k, iv in enumerate(intervals):
        for i, task in enumerate(taskset.tasks):
            counts = state.counts_for(i, k)
            try:
                segs = classify_segments(task, iv, CountCandidates(counts), k)
            except DegenerateSegmentError:
                # inconsistent candidates (forced match); contribute nothing
                state.degenerate_skips += 1
                continue
            if segs:
                state.segments[(task.id, k)] = segs

    state.histograms = {}
    state.windows = {}
    for task in taskset.tasks:
        segs = [
            s
            for (tid, _), ss in state.segments.items()
            if tid == task.id
            for s in ss
        ]
        hist = accumulate_histogram(task, segs)
        state.histograms[task.id] = hist
        try:
            state.windows[task.id] = candidate_arrival_windows(hist)
        except NoArrivalEvidence:
            state.windows[task.id] = []


def project_window(
    window: ArrivalWindow, task: TaskSpec, interval: BusyInterval, h: int
) -> tuple[Tick, Tick]:
    """Absolute tick range of the h-th projected job arrival window."""
    if h < 1:
        raise ValueError("job index h starts at 1")
    p = task.period
    end = window.end if window.end >= window.begin else window.end + p
    shift = (math.ceil(interval.start / p) + h - 1) * p
    return window.begin + shift, end + shift


def resolve_interval(
    state: InferenceState,
    taskset: TaskSet,
    task_index: int,
    interval_index: int,
    interval: BusyInterval,
) -> bool:
    """Apply one task's unique window to one interval; returns True on pruning.

    The task's possibly-one segment flips to contain-one when some projected
    window overlaps it (prune the lower count) and to contain-none otherwise
    (prune the higher count).
    """
    task = taskset.tasks[task_index]
    vectors = state.vectors[interval_index]
    counts = state.counts_for(task_index, interval_index)
    if len(counts) <= 1:
        return False
    segs = state.segments.get((task.id, interval_index), [])
    maybe = [s for s in segs if s.kind is SegmentKind.ZERO_OR_ONE]
    if not maybe:
        return False
    seg = maybe[0]

    window = state.windows[task.id][0]
    p = task.period
    w_begin = window.begin
    w_end = window.end if window.end >= window.begin else window.end + p
    # grid shifts whose projected window [w_begin + m*p, w_end + m*p]
    # overlaps the segment; m may sit one step below the ceiling-based
    # index when the window ends past the interval start position
    m_lo = max(0, math.ceil((seg.begin - w_end) / p))
    m_hi = math.floor((seg.end - w_begin) / p)
    overlaps = m_lo <= m_hi

    low, high = counts[0], counts[-1]
    confirmed = high if overlaps else low
    pruned = [v for v in vectors if v.counts[task_index] == confirmed]
    if not pruned:
        state.conflicts += 1
        pruned = [vectors[0]]
    if len(pruned) == len(vectors):
        return False
    state.vectors[interval_index] = pruned
    return True


def refine_fixpoint(
    taskset: TaskSet,
    intervals: list[BusyInterval],
    state: InferenceState,
    max_iterations: int = 16,
    trace_fn=None,
) -> InferenceState:
    """Alternate window derivation and interval resolution until stable.

    ``trace_fn``, when given, receives (iteration, total surviving vectors,
    total candidate windows) after each resolution pass.
    """
    for iteration in range(1, max_iterations + 1):
        state.iterations = iteration
        changed = False
        for i, task in enumerate(taskset.tasks):
            if len(state.windows.get(task.id, [])) != 1:
                continue
            for k, iv in enumerate(intervals):
                if resolve_interval(state, taskset, i, k, iv):
                    changed = True
        if trace_fn is not None:
            trace_fn(
                iteration,
                sum(len(vs) for vs in state.vectors),
                sum(len(ws) for ws in state.windows.values()),
            )
        if not changed:
            state.converged = True
            break
        _derive(taskset, intervals, state)
    return state
