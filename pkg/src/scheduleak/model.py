"""Core domain types for tick-based fixed-priority schedules.

All times are non-negative integer ticks.  Execution slices are half-open
[begin, end); inference segments and arrival windows elsewhere in the
package use closed endpoints, where the end is the last feasible tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

Tick = int

#: hyper-periods beyond this are treated as a configuration error
MAX_TICK: Tick = 2**63 - 1

TASKSET_HEADER = "# scheduleak-taskset v1"


class ConfigurationError(ValueError):
    """Invalid task parameters or an inconsistent task set."""


class FormatError(ValueError):
    """Malformed task-set or CSV input."""


@dataclass(frozen=True)
class TaskSpec:
    """One periodic task.

    ``offset`` is ground truth, hidden from the attack side.  ``gamma`` and
    ``theta`` are the attack-side tolerance bounds on execution-time
    deviation and arrival jitter (ticks); they do not affect simulation.
    """

    id: int
    period: Tick
    wcet: Tick
    acet: Tick
    offset: Tick
    priority: int
    gamma: Tick = 0
    theta: Tick = 0

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise ConfigurationError(f"task {self.id}: period must be positive")
        if not 0 < self.acet <= self.wcet <= self.period:
            raise ConfigurationError(
                f"task {self.id}: need 0 < acet <= wcet <= period, "
                f"got acet={self.acet} wcet={self.wcet} period={self.period}"
            )
        if not 0 <= self.offset < self.period:
            raise ConfigurationError(f"task {self.id}: offset must lie in [0, period)")
        if self.gamma < 0 or self.theta < 0:
            raise ConfigurationError(f"task {self.id}: tolerance bounds must be >= 0")
        if self.gamma >= self.acet:
            raise ConfigurationError(f"task {self.id}: gamma must be < acet")

    @property
    def deadline(self) -> Tick:
        # implicit deadlines: a job must finish before the next arrival
        return self.period

    @property
    def utilization(self) -> Fraction:
        return Fraction(self.wcet, self.period)


@dataclass(frozen=True)
class TaskSet:
    tasks: tuple[TaskSpec, ...]

    def __post_init__(self) -> None:
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("task ids must be unique")
        prios = [t.priority for t in self.tasks]
        if len(set(prios)) != len(prios):
            raise ConfigurationError("priorities must be unique")
        if self.tasks and sum(t.utilization for t in self.tasks) > 1:
            raise ConfigurationError("total utilization exceeds 1")

    def __iter__(self):
        return iter(self.tasks)

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def hyper_period(self) -> Tick:
        return hyper_period(self)

    @property
    def utilization(self) -> float:
        return float(sum(t.utilization for t in self.tasks))

    def by_id(self, task_id: int) -> TaskSpec:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(task_id)

    def by_priority(self) -> list[TaskSpec]:
        """Tasks ordered from highest to lowest priority."""
        return sorted(self.tasks, key=lambda t: -t.priority)


def hyper_period(taskset: TaskSet) -> Tick:
    """Least common multiple of all task periods."""
    if not taskset.tasks:
        raise ConfigurationError("empty task set has no hyper-period")
    h = math.lcm(*(t.period for t in taskset.tasks))
    if h > MAX_TICK:
        raise ConfigurationError(f"hyper-period {h} overflows the tick range")
    return h


@dataclass(frozen=True)
class Job:
    """One periodic instance: arrival, first executing tick, completion."""

    task_id: int
    ordinal: int
    arrival: Tick
    start: Tick
    completion: Tick

    def __post_init__(self) -> None:
        if not self.arrival <= self.start < self.completion:
            raise ConfigurationError("job must satisfy arrival <= start < completion")


@dataclass(frozen=True)
class ExecSlice:
    task_id: int
    begin: Tick
    end: Tick

    def __post_init__(self) -> None:
        if not self.begin < self.end:
            raise ConfigurationError("empty execution slice")


@dataclass(frozen=True)
class BusyInterval:
    """Maximal span of non-idle time, occupying [start, start + length)."""

    start: Tick
    length: Tick

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ConfigurationError("busy interval must have positive length")

    @property
    def end(self) -> Tick:
        return self.start + self.length


@dataclass(frozen=True)
class Trace:
    """Ground-truth schedule over [0, end): slices, per-task jobs, idle gaps."""

    slices: tuple[ExecSlice, ...]
    jobs: dict[int, tuple[Job, ...]]
    idle: tuple[tuple[Tick, Tick], ...]
    end: Tick
    truncated: bool = False

    def all_jobs(self) -> list[Job]:
        out = [j for js in self.jobs.values() for j in js]
        out.sort(key=lambda j: (j.arrival, j.task_id))
        return out


# ---------------------------------------------------------------------------
# file formats


def write_taskset(taskset: TaskSet, path: str | Path) -> None:
    lines = [TASKSET_HEADER]
    for t in taskset.tasks:
        lines.append(
            f"{t.id},{t.period},{t.wcet},{t.acet},{t.offset},"
            f"{t.priority},{t.gamma},{t.theta}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_taskset(path: str | Path) -> TaskSet:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != TASKSET_HEADER:
        raise FormatError(f"missing '{TASKSET_HEADER}' header line")
    tasks = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 8:
            raise FormatError(f"expected 8 comma-separated fields, got: {ln!r}")
        try:
            vals = [int(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"non-integer field in line: {ln!r}") from exc
        tasks.append(TaskSpec(*vals))
    return TaskSet(tuple(tasks))


def write_trace_csv(trace: Trace, path: str | Path) -> None:
    lines = ["begin,end,task_id"]
    lines += [f"{s.begin},{s.end},{s.task_id}" for s in trace.slices]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_slices_csv(path: str | Path) -> list[ExecSlice]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "begin,end,task_id":
        raise FormatError("expected 'begin,end,task_id' header")
    out = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        b, e, tid = (int(x) for x in ln.split(","))
        out.append(ExecSlice(task_id=tid, begin=b, end=e))
    return out


def write_busy_csv(intervals: Iterable[BusyInterval], path: str | Path) -> None:
    lines = ["start,length"]
    lines += [f"{iv.start},{iv.length}" for iv in intervals]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_busy_csv(path: str | Path) -> list[BusyInterval]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "start,length":
        raise FormatError("expected 'start,length' header")
    out = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        s, l = (int(x) for x in ln.split(","))
        out.append(BusyInterval(start=s, length=l))
    return out


def slices_to_busy_intervals(slices: Sequence[ExecSlice]) -> list[BusyInterval]:
    """Maximal runs of back-to-back slices, in time order."""
    out: list[BusyInterval] = []
    run_start: Tick | None = None
    run_end: Tick = 0
    for s in slices:
        if run_start is None:
            run_start, run_end = s.begin, s.end
        elif s.begin == run_end:
            run_end = s.end
        else:
            out.append(BusyInterval(run_start, run_end - run_start))
            run_start, run_end = s.begin, s.end
    if run_start is not None:
        out.append(BusyInterval(run_start, run_end - run_start))
    return out
