"""Task-set generation, priority assignment, and schedulability."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scheduleak.generator import (
    GenConfig,
    GenerationInfeasible,
    generate_taskset,
    harmonic_pair_count,
    rm_priorities,
    rta_schedulable,
    split_utilization,
)
from scheduleak.model import ConfigurationError, TaskSet, TaskSpec


def rta_oracle(taskset):
    """Independent response-time fixpoint, returning per-task response times."""
    out = {}
    by_prio = sorted(taskset.tasks, key=lambda t: -t.priority)
    for i, task in enumerate(by_prio):
        r = task.wcet
        while True:
            nxt = task.wcet + sum(
                math.ceil(r / h.period) * h.wcet for h in by_prio[:i]
            )
            if nxt == r or nxt > 10 * task.period:
                r = nxt
                break
            r = nxt
        out[task.id] = r
    return out


class TestSplitUtilization:
    def test_single(self):
        rng = np.random.default_rng(0)
        assert split_utilization(0.5, 1, rng) == [0.5]

    def test_sum_property(self):
        rng = np.random.default_rng(1)
        utils = split_utilization(0.6, 3, rng)
        assert len(utils) == 3
        assert all(u > 0 for u in utils)
        assert math.isclose(sum(utils), 0.6)

    def test_monte_carlo_mean(self):
        # simplex-uniform split: each share has expectation total/n
        rng = np.random.default_rng(2)
        draws = np.array([split_utilization(0.9, 10, rng) for _ in range(4000)])
        assert np.allclose(draws.sum(axis=1), 0.9)
        assert abs(draws.mean() - 0.09) < 0.003

    @given(st.floats(0.01, 1.0), st.integers(1, 12), st.integers(0, 10**6))
    @settings(max_examples=100)
    def test_always_positive_and_sums(self, total, n, seed):
        utils = split_utilization(total, n, np.random.default_rng(seed))
        assert len(utils) == n
        assert all(u > 0 for u in utils)
        assert math.isclose(sum(utils), total, rel_tol=1e-9)


class TestRMPriorities:
    def test_shorter_period_outranks(self):
        ts = TaskSet((TaskSpec(1, 5, 1, 1, 0, 1), TaskSpec(2, 6, 2, 2, 0, 2),
                      TaskSpec(3, 10, 2, 2, 0, 3)))
        out = rm_priorities(ts)
        pri = {t.id: t.priority for t in out.tasks}
        assert pri[1] > pri[2] > pri[3]

    def test_tie_breaks_to_lower_id(self):
        ts = TaskSet((TaskSpec(1, 10, 1, 1, 0, 1), TaskSpec(2, 10, 1, 1, 0, 2)))
        out = rm_priorities(ts)
        pri = {t.id: t.priority for t in out.tasks}
        assert pri[1] > pri[2]

    def test_single_task_highest(self):
        out = rm_priorities(TaskSet((TaskSpec(1, 10, 1, 1, 0, 99),)))
        assert out.tasks[0].priority == 1

    def test_priorities_are_permutation(self):
        ts = rm_priorities(make_random_specs([70, 30, 30, 120, 50]))
        assert sorted(t.priority for t in ts.tasks) == [1, 2, 3, 4, 5]


def make_random_specs(periods):
    return TaskSet(
        tuple(TaskSpec(i + 1, p, 1, 1, 0, i + 1) for i, p in enumerate(periods))
    )


class TestRTA:
    def test_worked_fixpoint(self):
        ts = rm_priorities(
            TaskSet((TaskSpec(1, 5, 1, 1, 0, 3), TaskSpec(2, 6, 2, 2, 0, 2),
                     TaskSpec(3, 10, 2, 2, 0, 1)))
        )
        assert rta_schedulable(ts)
        assert rta_oracle(ts) == {1: 1, 2: 3, 3: 5}

    def test_unschedulable_at_full_utilization(self):
        # U = 1.0 but non-harmonic: response of the low task exceeds its deadline
        ts = rm_priorities(
            TaskSet((TaskSpec(1, 4, 2, 2, 0, 2), TaskSpec(2, 6, 3, 3, 0, 1)))
        )
        assert not rta_schedulable(ts)
        assert rta_oracle(ts)[2] > 6

    def test_harmonic_full_utilization_schedulable(self):
        ts = rm_priorities(
            TaskSet((TaskSpec(1, 4, 2, 2, 0, 2), TaskSpec(2, 8, 4, 4, 0, 1)))
        )
        assert rta_schedulable(ts)


class TestGenerateTaskset:
    def test_high_utilization_set(self):
        cfg = GenConfig(n_tasks=3, util_range=(0.9, 1.0), rng_seed=42)
        ts = generate_taskset(cfg)
        util = sum(t.wcet / t.period for t in ts.tasks)
        assert 0.9 <= util <= 1.0
        assert rta_schedulable(ts)

    def test_single_task_half_utilization(self):
        cfg = GenConfig(n_tasks=1, util_range=(0.49, 0.51), rng_seed=3)
        ts = generate_taskset(cfg)
        t = ts.tasks[0]
        assert 0.45 <= t.wcet / t.period <= 0.55

    def test_deterministic(self):
        cfg = GenConfig(n_tasks=5, util_range=(0.3, 0.4), rng_seed=77)
        assert generate_taskset(cfg) == generate_taskset(cfg)

    def test_periods_divide_hyper_period_cap(self):
        cfg = GenConfig(n_tasks=8, util_range=(0.4, 0.5), rng_seed=5)
        ts = generate_taskset(cfg)
        assert ts.hyper_period <= 30030
        for t in ts.tasks:
            assert 30030 % t.period == 0

    def test_period_factor_closure(self):
        cfg = GenConfig(n_tasks=6, util_range=(0.2, 0.3), rng_seed=9)
        ts = generate_taskset(cfg)
        for t in ts.tasks:
            n = t.period
            for f in (2, 3, 5, 7, 11, 13):
                if n % f == 0:
                    n //= f
            assert n == 1, f"period {t.period} not a product of distinct factors"

    def test_acet_fraction_applied(self):
        cfg = GenConfig(n_tasks=4, util_range=(0.5, 0.6), rng_seed=11)
        ts = generate_taskset(cfg)
        for t in ts.tasks:
            assert t.acet == max(1, round(0.8 * t.wcet))
            assert 0 <= t.gamma < t.acet

    def test_infeasible_config_raises(self):
        cfg = GenConfig(n_tasks=1, util_range=(0.97, 0.98),
                        period_factors=(2,), max_retries=200)
        with pytest.raises(GenerationInfeasible):
            generate_taskset(cfg)

    @given(st.integers(0, 9), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_generated_sets_always_valid(self, bin_index, seed):
        lo, hi = 0.001 + 0.1 * bin_index, 0.1 + 0.1 * bin_index
        ts = generate_taskset(GenConfig(n_tasks=4, util_range=(lo, hi), rng_seed=seed))
        assert lo <= sum(t.wcet / t.period for t in ts.tasks) <= hi
        assert rta_schedulable(ts)
        for t in ts.tasks:
            assert 0 <= t.offset < t.period

    def test_bad_config_rejected(self):
        with pytest.raises(ConfigurationError):
            GenConfig(n_tasks=0, util_range=(0.1, 0.2))
        with pytest.raises(ConfigurationError):
            GenConfig(n_tasks=3, util_range=(0.5, 0.4))
        with pytest.raises(ConfigurationError):
            GenConfig(n_tasks=3, util_range=(0.0, 0.4))


class TestHarmonicPairs:
    def test_counts_divisor_pairs(self):
        ts = make_random_specs([4, 8, 6])
        assert harmonic_pair_count(ts) == 1

    def test_equal_periods_are_harmonic(self):
        ts = make_random_specs([10, 10])
        assert harmonic_pair_count(ts) == 1

    def test_coprime_periods(self):
        ts = make_random_specs([7, 11, 13])
        assert harmonic_pair_count(ts) == 0
