"""Random schedulable task sets grouped by utilization.

Periods are products of distinct small prime factors so every period
divides the 30030 hyper-period cap; per-task utilizations come from a
simplex-uniform split of the set total; priorities are rate-monotonic and
only sets passing response-time analysis are returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ConfigurationError, TaskSet, TaskSpec, Tick


class GenerationInfeasible(RuntimeError):
    """The retry budget ran out without producing a valid task set."""


@dataclass(frozen=True)
class GenConfig:
    n_tasks: int
    util_range: tuple[float, float]
    period_factors: tuple[int, ...] = (2, 3, 5, 7, 11, 13)
    acet_fraction: float = 0.8
    rng_seed: int = 0
    allow_factor_repetition: bool = False
    hyper_period_cap: Tick = 30030
    max_retries: int = 10_000

    def __post_init__(self) -> None:
        lo, hi = self.util_range
        if not 0 < lo < hi <= 1.0:
            raise ConfigurationError("util_range must satisfy 0 < lo < hi <= 1.0")
        if not 1 <= self.n_tasks <= 15:
            raise ConfigurationError("n_tasks must be in [1, 15]")
        if not 0 < self.acet_fraction <= 1:
            raise ConfigurationError("acet_fraction must be in (0, 1]")
        if not self.period_factors:
            raise ConfigurationError("period_factors must be non-empty")


def split_utilization(total: float, n: int, rng) -> list[float]:
    """UUniFast: n positive fractions summing to ``total``, simplex-uniform."""
    if not 0 < total <= 1 or n < 1:
        raise ConfigurationError("need 0 < total <= 1 and n >= 1")
    utils = []
    remaining = total
    for i in range(n - 1):
        nxt = remaining * rng.random() ** (1.0 / (n - i - 1))
        utils.append(remaining - nxt)
        remaining = nxt
    utils.append(remaining)
    return utils


def rm_priorities(taskset: TaskSet) -> TaskSet:
    """Rate-monotonic assignment: shorter period outranks, ties to lower id."""
    order = sorted(taskset.tasks, key=lambda t: (t.period, t.id))
    n = len(order)
    prio = {t.id: n - rank for rank, t in enumerate(order)}
    return TaskSet(
        tuple(
            TaskSpec(t.id, t.period, t.wcet, t.acet, t.offset, prio[t.id], t.gamma, t.theta)
            for t in taskset.tasks
        )
    )


def rta_schedulable(taskset: TaskSet) -> bool:
    """Worst-case response-time fixpoint check against implicit deadlines."""
    by_prio = taskset.by_priority()
    for idx, task in enumerate(by_prio):
        higher = by_prio[:idx]
        r = task.wcet
        while True:
            demand = task.wcet + sum(
                math.ceil(r / h.period) * h.wcet for h in higher
            )
            if demand == r:
                break
            r = demand
            if r > task.deadline:
                return False
        if r > task.deadline:
            return False
    return True


def _draw_period(cfg: GenConfig, rng) -> Tick:
    nf = len(cfg.period_factors)
    if cfg.allow_factor_repetition:
        k = int(rng.integers(1, nf + 1))
        picks = rng.integers(0, nf, size=k)
    else:
        # uniform non-empty subset: each factor is in or out
        while True:
            mask = rng.integers(0, 2, size=nf)
            if mask.any():
                break
        picks = np.nonzero(mask)[0]
    period = 1
    for i in picks:
        period *= cfg.period_factors[int(i)]
    return period


def generate_taskset(config: GenConfig) -> TaskSet:
    """Draw until a schedulable set within the utilization range appears.

    Tiny per-task utilizations need large periods for a one-tick wcet to
    stay proportionate, so each task redraws its period a bounded number of
    times before the whole attempt is abandoned.
    """
    rng = np.random.default_rng(config.rng_seed)
    lo, hi = config.util_range
    for _ in range(config.max_retries):
        total = rng.uniform(lo, hi)
        utils = split_utilization(total, config.n_tasks, rng)
        tasks = []
        ok = True
        for tid, u in enumerate(utils, start=1):
            period = wcet = 0
            for _ in range(64):
                period = _draw_period(config, rng)
                wcet = max(1, round(u * period))
                if wcet <= period and u * period >= 0.5:
                    break
            else:
                ok = False
                break
            acet = max(1, round(config.acet_fraction * wcet))
            gamma = min(wcet - acet, acet - 1)
            offset = int(rng.integers(0, period))
            # placeholder priority; rate-monotonic assignment replaces it
            tasks.append(
                TaskSpec(tid, period, wcet, acet, offset, priority=tid,
                         gamma=max(0, gamma), theta=0)
            )
        if not ok:
            continue
        util = sum(t.wcet / t.period for t in tasks)
        if not lo <= util <= hi:
            continue
        try:
            ts = rm_priorities(TaskSet(tuple(tasks)))
        except ConfigurationError:
            continue
        if ts.hyper_period > config.hyper_period_cap:
            continue
        if rta_schedulable(ts):
            return ts
    raise GenerationInfeasible(
        f"no schedulable set with U in [{lo}, {hi}] for n={config.n_tasks} "
        f"within {config.max_retries} draws"
    )


def harmonic_pair_count(taskset: TaskSet) -> int:
    """Pairs of tasks whose periods divide one another."""
    count = 0
    tasks = taskset.tasks
    for i in range(len(tasks)):
        for j in range(i + 1, len(tasks)):
            pi, pj = tasks[i].period, tasks[j].period
            if pi % pj == 0 or pj % pi == 0:
                count += 1
    return count
