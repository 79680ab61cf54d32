"""Fixed-priority preemptive scheduling of periodic task sets.

``simulate`` produces the ground-truth trace; ``busy_intervals`` reduces a
trace to the observer's view (start, length pairs with job contents
withheld); ``clip_observation`` restricts that view to a window.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .model import (
    BusyInterval,
    ConfigurationError,
    ExecSlice,
    Job,
    TaskSet,
    TaskSpec,
    Tick,
    Trace,
    slices_to_busy_intervals,
)


class SimulationError(RuntimeError):
    """A deadline miss or other internal inconsistency during simulation."""


@dataclass(frozen=True)
class VariationModel:
    """Per-job execution-time and arrival noise applied by the simulator.

    ``mean_fraction`` states the acet/wcet ratio the model was fitted to;
    the sampler itself always centres on the task's acet.
    ``arrival_jitter`` is the actual jitter bound in ticks (0 disables it);
    the attack-side assumed bound lives in ``TaskSpec.theta``.
    """

    kind: str = "none"
    mean_fraction: float = 0.8
    upper_tail_prob: float = 1e-4
    arrival_jitter: Tick = 0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "truncated_normal"):
            raise ConfigurationError(f"unknown variation kind {self.kind!r}")
        if not 0 < self.mean_fraction <= 1:
            raise ConfigurationError("mean_fraction must be in (0, 1]")
        if not 0 < self.upper_tail_prob < 0.5:
            raise ConfigurationError("upper_tail_prob must be in (0, 0.5)")
        if self.arrival_jitter < 0:
            raise ConfigurationError("arrival_jitter must be >= 0")


NO_VARIATION = VariationModel(kind="none")


@dataclass(frozen=True)
class ObservationWindow:
    start: Tick
    length: Tick

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ConfigurationError("observation window must have positive length")

    @property
    def end(self) -> Tick:
        return self.start + self.length


def sample_exec_time(task: TaskSpec, variation: VariationModel, rng) -> Tick:
    """One job's execution time in ticks.

    The truncated-normal model centres on acet with the upper tail mass
    beyond wcet set by ``upper_tail_prob``; draws are rounded half-up and
    clamped into [max(1, 2*acet - wcet), wcet], keeping the mean at acet.
    """
    if variation.kind == "none" or task.wcet == task.acet:
        return task.acet
    z = NormalDist().inv_cdf(1.0 - variation.upper_tail_prob)
    sigma = (task.wcet - task.acet) / z
    draw = rng.normal(task.acet, sigma)
    val = int(np.floor(draw + 0.5))
    lo = max(1, 2 * task.acet - task.wcet)
    return min(max(val, lo), task.wcet)


class _ActiveJob:
    __slots__ = ("task", "ordinal", "arrival", "remaining", "start")

    def __init__(self, task: TaskSpec, ordinal: int, arrival: Tick, exec_time: Tick):
        self.task = task
        self.ordinal = ordinal
        self.arrival = arrival
        self.remaining = exec_time
        self.start: Tick | None = None


def simulate(
    taskset: TaskSet,
    horizon: Tick,
    variation: VariationModel = NO_VARIATION,
    seed: int = 0,
    max_extension: Tick | None = None,
) -> Trace:
    """Event-driven preemptive schedule of ``taskset`` over at least ``horizon``.

    At every arrival or completion the highest-priority ready job runs.  The
    trace extends past ``horizon`` until the CPU first goes idle, so the
    busy interval in flight at the horizon is recorded to completion; the
    extension is capped (default 2 hyper-periods) and a forced cut marks the
    trace as truncated.
    """
    if horizon <= 0:
        raise ConfigurationError("horizon must be positive")
    if not taskset.tasks:
        return Trace(slices=(), jobs={}, idle=((0, horizon),), end=horizon)

    if max_extension is None:
        max_extension = 2 * taskset.hyper_period
    cap = horizon + max_extension

    # per-task generator streams keep sampling order independent of the
    # event interleaving
    streams = {
        t.id: np.random.default_rng(child)
        for t, child in zip(taskset.tasks, np.random.SeedSequence(seed).spawn(len(taskset)))
    }

    jitter_on = variation.arrival_jitter > 0

    def arrivals_for(task: TaskSpec):
        h = 0
        prev = -1
        while True:
            nominal = task.offset + h * task.period
            if nominal > cap:
                return
            t = nominal
            if jitter_on:
                j = int(streams[task.id].integers(-variation.arrival_jitter,
                                                  variation.arrival_jitter + 1))
                # jitter must not reorder a task's own arrivals
                t = max(0, nominal + j, prev + 1)
            prev = t
            yield h, t
            h += 1

    arr_iters = {t.id: arrivals_for(t) for t in taskset.tasks}
    # heap of upcoming arrivals: (time, -priority, task_id)
    upcoming: list[tuple[Tick, int, int]] = []
    for t in taskset.tasks:
        nxt = next(arr_iters[t.id], None)
        if nxt is not None:
            upcoming.append((nxt[1], -t.priority, t.id, nxt[0]))
    heapq.heapify(upcoming)

    ready: list[tuple[int, Tick, int, _ActiveJob]] = []  # (-priority, arrival, ordinal, job)
    slices: list[ExecSlice] = []
    jobs: dict[int, list[Job]] = {t.id: [] for t in taskset.tasks}
    last_job: _ActiveJob | None = None

    def admit(now: Tick) -> None:
        while upcoming and upcoming[0][0] <= now:
            at, negpri, tid, ordinal = heapq.heappop(upcoming)
            task = taskset.by_id(tid)
            exec_time = sample_exec_time(task, variation, streams[tid])
            heapq.heappush(ready, (negpri, at, ordinal, _ActiveJob(task, ordinal, at, exec_time)))
            nxt = next(arr_iters[tid], None)
            if nxt is not None:
                heapq.heappush(upcoming, (nxt[1], negpri, tid, nxt[0]))

    now: Tick = 0
    truncated = False
    while True:
        admit(now)
        if not ready:
            nxt = upcoming[0][0] if upcoming else None
            # an arrival exactly at the horizon continues the busy run, so
            # only a strict gap past the horizon ends the trace
            if now >= horizon or nxt is None or nxt > horizon:
                end = max(now, horizon)
                break
            now = nxt
            continue
        if now >= cap:
            truncated = True
            end = cap
            break
        _, _, _, job = heapq.heappop(ready)
        if job.start is None:
            job.start = now
        next_arrival = upcoming[0][0] if upcoming else cap
        run = min(job.remaining, next_arrival - now, cap - now)
        if slices and last_job is job and slices[-1].end == now:
            slices[-1] = ExecSlice(job.task.id, slices[-1].begin, now + run)
        else:
            slices.append(ExecSlice(job.task.id, now, now + run))
        last_job = job
        job.remaining -= run
        now += run
        if job.remaining == 0:
            if variation.arrival_jitter == 0 and now > job.arrival + job.task.deadline:
                raise SimulationError(
                    f"task {job.task.id} job {job.ordinal} missed its deadline at {now}"
                )
            jobs[job.task.id].append(
                Job(job.task.id, job.ordinal, job.arrival, job.start, now)
            )
        else:
            heapq.heappush(ready, (-job.task.priority, job.arrival, job.ordinal, job))

    idle: list[tuple[Tick, Tick]] = []
    cursor = 0
    for iv in slices_to_busy_intervals(slices):
        if iv.start > cursor:
            idle.append((cursor, iv.start))
        cursor = iv.end
    if cursor < end:
        idle.append((cursor, end))

    return Trace(
        slices=tuple(slices),
        jobs={tid: tuple(js) for tid, js in jobs.items()},
        idle=tuple(idle),
        end=end,
        truncated=truncated,
    )


def busy_intervals(trace: Trace) -> list[BusyInterval]:
    """Maximal non-idle runs, ordered by start tick."""
    return slices_to_busy_intervals(trace.slices)


def clip_observation(
    intervals: list[BusyInterval], window: ObservationWindow
) -> list[BusyInterval]:
    """Intervals lying fully inside the window; edge-crossers are discarded."""
    return [
        iv
        for iv in intervals
        if iv.start >= window.start and iv.end <= window.end
    ]
