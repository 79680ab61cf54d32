"""Per-task job-count candidates and busy-interval composition matching.

For a busy interval of length l, each task can have contributed only N or
{N, N+1} jobs depending on where l falls relative to the task's period and
effective execution time; the Cartesian product of those candidates is
filtered down to count vectors whose nominal total matches l within the
execution-variation tolerance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .model import BusyInterval, TaskSet, TaskSpec, Tick


class ToleranceError(ValueError):
    """The combined tolerances leave no usable effective execution time."""


@dataclass(frozen=True)
class CountCandidates:
    """One or two consecutive feasible job counts for a (task, interval) pair."""

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("candidate set must be non-empty")
        if len(self.values) > 2:
            raise ValueError("at most two candidate counts are possible")
        if len(self.values) == 2 and self.values[1] != self.values[0] + 1:
            raise ValueError("two candidates must be consecutive")

    def __contains__(self, n: int) -> bool:
        return n in self.values

    @property
    def exact(self) -> bool:
        return len(self.values) == 1


@dataclass(frozen=True)
class JobCountVector:
    """Per-task job counts explaining one busy interval's length."""

    counts: tuple[int, ...]
    residual: Tick
    forced: bool = False


def effective_exec_time(task: TaskSpec) -> Tick:
    """Execution time shrunk by the jitter and variation tolerances."""
    c_hat = task.acet - 2 * task.theta - task.gamma
    if c_hat <= 0:
        raise ToleranceError(
            f"task {task.id}: tolerance exceeds execution time "
            f"(acet={task.acet}, gamma={task.gamma}, theta={task.theta})"
        )
    return c_hat


def job_count_candidates(task: TaskSpec, length: Tick) -> CountCandidates:
    """Feasible job counts for ``task`` inside a busy interval of ``length``.

    Scanning N upward, the first matching condition wins: exactly N when
    max(N*p - c, 0) <= l < N*p + c, and N or N+1 when
    N*p + c <= l < (N+1)*p - c, with c the effective execution time.

    One sound correction to the exact branch: for N = 1 and l in [p-c, p)
    the interval can also contain no job at all (nothing pins the task to
    an interval shorter than its period; the finished-in-under-c argument
    needs a preceding arrival, which N = 1 lacks), so that zone yields
    {0, 1}.
    """
    if length <= 0:
        raise ValueError("busy interval length must be positive")
    p = task.period
    c = effective_exec_time(task)
    n = 0
    while True:
        if max(n * p - c, 0) <= length < n * p + c:
            if n == 1 and length < p:
                return CountCandidates((0, 1))
            return CountCandidates((n,))
        if n * p + c <= length < (n + 1) * p - c:
            return CountCandidates((n, n + 1))
        n += 1
        if n * p - c > length:
            # conditions partition the axis whenever 2c <= p; reaching here
            # means the length fell in an unrealizable gap
            return CountCandidates((n - 1, n))


def enumerate_matches(
    taskset: TaskSet, interval: BusyInterval
) -> list[JobCountVector]:
    """Count vectors whose nominal length matches the interval.

    A vector (n_1, ..., n_k) is kept when |sum(n_i * acet_i) - l| is within
    sum(n_i * gamma_i).  The result is sorted by ascending residual, ties by
    lexicographic counts; when nothing survives the filter the single
    minimal-residual vector is returned flagged as forced.
    """
    length = interval.length
    cands = [job_count_candidates(t, length) for t in taskset.tasks]

    options = [np.asarray(c.values, dtype=np.int64) for c in cands]
    sums = np.zeros(1, dtype=np.int64)
    tols = np.zeros(1, dtype=np.int64)
    for task, opts in zip(taskset.tasks, options):
        sums = (sums[:, None] + opts[None, :] * task.acet).ravel()
        tols = (tols[:, None] + opts[None, :] * task.gamma).ravel()
    residuals = np.abs(sums - length)

    keep = np.nonzero(residuals <= tols)[0]
    forced = keep.size == 0
    if forced:
        keep = np.array([int(np.argmin(residuals))])

    sizes = [o.size for o in options]

    def decode(flat: int) -> tuple[int, ...]:
        digits = []
        for size in reversed(sizes):
            digits.append(flat % size)
            flat //= size
        return tuple(int(options[i][d]) for i, d in enumerate(reversed(digits)))

    vectors = [
        JobCountVector(decode(int(i)), int(residuals[i]), forced) for i in keep
    ]
    vectors.sort(key=lambda v: (v.residual, v.counts))
    if forced:
        vectors = vectors[:1]
    return vectors


def ambiguity_witness(
    taskset: TaskSet,
) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Two disjoint non-empty task-id groups with equal total execution time.

    Such a pair witnesses that some busy-interval length admits more than
    one count-vector explanation.  Returns None when all subset sums are
    distinct.  Exhaustive over subsets, so limited to 20 tasks.
    """
    n = len(taskset.tasks)
    if n > 20:
        raise ValueError("ambiguity scan is exhaustive; limited to 20 tasks")
    ids = [t.id for t in taskset.tasks]
    acets = [t.acet for t in taskset.tasks]

    seen: dict[int, int] = {}
    for mask in range(1, 1 << n):
        total = 0
        m = mask
        while m:
            low = m & -m
            total += acets[low.bit_length() - 1]
            m ^= low
        if total in seen:
            a, b = seen[total], mask
            plus = a & ~b
            minus = b & ~a
            if plus and minus:
                set_a = tuple(ids[i] for i in range(n) if plus >> i & 1)
                set_b = tuple(ids[i] for i in range(n) if minus >> i & 1)
                if min(set_b) < min(set_a):
                    set_a, set_b = set_b, set_a
                return set_a, set_b
        else:
            seen[total] = mask
    return None
