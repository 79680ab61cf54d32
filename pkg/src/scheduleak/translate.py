"""Start-time reconstruction from committed arrivals.

Committing the earliest candidate window pins each task's arrival grid;
replaying each busy interval's inferred arrivals through a nominal-time
fixed-priority scheduler yields per-job start times.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .model import BusyInterval, TaskSet, TaskSpec, Tick
from .refine import InferenceState
from .windows import ArrivalWindow


@dataclass(frozen=True)
class InferredJob:
    task_id: int
    arrival: Tick
    start: Tick


@dataclass
class ReconstructionFlags:
    unconverged: bool = False
    conflicts: int = 0
    forced_matches: int = 0
    dropped_jobs: int = 0
    overflows: int = 0
    no_evidence: tuple[int, ...] = ()


@dataclass
class ReconstructedSchedule:
    arrivals: dict[int, Tick]
    intervals: list[BusyInterval]
    jobs_by_interval: list[list[InferredJob]]
    flags: ReconstructionFlags = field(default_factory=ReconstructionFlags)

    def all_jobs(self) -> list[InferredJob]:
        return [j for js in self.jobs_by_interval for j in js]

    def starts_by_task(self) -> dict[int, list[Tick]]:
        out: dict[int, list[Tick]] = {tid: [] for tid in self.arrivals}
        for j in self.all_jobs():
            out.setdefault(j.task_id, []).append(j.start)
        for starts in out.values():
            starts.sort()
        return out


def commit_arrival(windows: list[ArrivalWindow]) -> Tick:
    """Beginning position of the earliest candidate window."""
    if not windows:
        raise ValueError("cannot commit an arrival from an empty window list")
    return min(w.begin for w in windows)


def arrivals_in_interval(
    arrival: Tick, task: TaskSpec, interval: BusyInterval, count: int
) -> tuple[list[Tick], int]:
    """``count`` grid arrivals starting at the first one inside the interval.

    The grid is arrival + multiples of the period.  An arrival landing at
    or past the interval end means the committed offset cannot place this
    job inside the interval it was inferred from: the job is dropped and
    counted in the second element (the attack misses it).
    """
    if count <= 0:
        return [], 0
    p = task.period
    first = arrival + p * max(0, math.ceil((interval.start - arrival) / p))
    out = []
    for j in range(count):
        t = first + j * p
        if t < interval.end:
            out.append(t)
    return out, count - len(out)


def compact_translate(
    taskset: TaskSet,
    interval: BusyInterval,
    arrivals: list[tuple[int, Tick]],
) -> tuple[list[InferredJob], Tick]:
    """Replay the given arrivals under fixed priorities with nominal times.

    Pops the earliest pending event (ties to the higher priority), preempts
    accordingly, and records each job's first executing tick; returns the
    jobs in arrival order plus the instant the interval's work drains.
    """
    if not arrivals:
        return [], interval.start
    pending = sorted(
        arrivals, key=lambda a: (a[1], -taskset.by_id(a[0]).priority)
    )
    ready: list[tuple[int, Tick, int, list]] = []  # (-pri, arrival, seq, state)
    jobs: list[InferredJob] = []
    idx = 0
    seq = 0
    now = pending[0][1]
    while idx < len(pending) or ready:
        while idx < len(pending) and pending[idx][1] <= now:
            tid, at = pending[idx]
            task = taskset.by_id(tid)
            heapq.heappush(ready, (-task.priority, at, seq, [tid, at, None, task.acet]))
            seq += 1
            idx += 1
        if not ready:
            now = pending[idx][1]
            continue
        _, _, _, job = heapq.heappop(ready)
        if job[2] is None:
            job[2] = now
        next_arrival = pending[idx][1] if idx < len(pending) else None
        run = job[3] if next_arrival is None else min(job[3], next_arrival - now)
        job[3] -= run
        now += run
        if job[3] == 0:
            jobs.append(InferredJob(task_id=job[0], arrival=job[1], start=job[2]))
        else:
            heapq.heappush(ready, (-taskset.by_id(job[0]).priority, job[1], seq, job))
            seq += 1
    jobs.sort(key=lambda j: (j.arrival, -taskset.by_id(j.task_id).priority))
    return jobs, now


def reconstruct(
    taskset: TaskSet,
    intervals: list[BusyInterval],
    state: InferenceState,
) -> ReconstructedSchedule:
    """Commit arrivals, translate every interval, aggregate jobs and flags."""
    flags = ReconstructionFlags(
        unconverged=not state.converged,
        conflicts=state.conflicts,
        forced_matches=state.forced_matches,
    )
    arrivals: dict[int, Tick] = {}
    silent = []
    for task in taskset.tasks:
        wins = state.windows.get(task.id, [])
        if wins:
            arrivals[task.id] = commit_arrival(wins)
        else:
            arrivals[task.id] = 0
            silent.append(task.id)
    flags.no_evidence = tuple(silent)

    jobs_by_interval: list[list[InferredJob]] = []
    for k, iv in enumerate(intervals):
        vector = state.vectors[k][0]
        interval_arrivals: list[tuple[int, Tick]] = []
        tolerance = 0
        for i, task in enumerate(taskset.tasks):
            count = vector.counts[i]
            tolerance += task.gamma * count
            sigmas, dropped = arrivals_in_interval(arrivals[task.id], task, iv, count)
            flags.dropped_jobs += dropped
            interval_arrivals += [(task.id, s) for s in sigmas]
        jobs, finish = compact_translate(taskset, iv, interval_arrivals)
        if finish > iv.end + tolerance:
            flags.overflows += 1
        jobs_by_interval.append(jobs)

    return ReconstructedSchedule(
        arrivals=arrivals,
        intervals=list(intervals),
        jobs_by_interval=jobs_by_interval,
        flags=flags,
    )
