"""Ground-truth scheduler, execution-time sampling, and the observer view."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scheduleak.generator import GenConfig, generate_taskset, rm_priorities
from scheduleak.model import BusyInterval, ExecSlice, TaskSet, TaskSpec
from scheduleak.simulator import (
    NO_VARIATION,
    ObservationWindow,
    SimulationError,
    VariationModel,
    busy_intervals,
    clip_observation,
    sample_exec_time,
    simulate,
)

EXAMPLE_SET = TaskSet(
    (TaskSpec(1, 5, 1, 1, 0, 3), TaskSpec(2, 6, 2, 2, 0, 2),
     TaskSpec(3, 10, 2, 2, 0, 1))
)


def replay_check(taskset, trace):
    """Work conservation and priority correctness, from jobs alone.

    At any executing tick, no higher-priority job may be ready-unfinished;
    at any idle tick, no job may be ready-unfinished.
    """
    jobs = [j for js in trace.jobs.values() for j in js]
    pri = {t.id: t.priority for t in taskset.tasks}
    for s in trace.slices:
        for j in jobs:
            if j.arrival <= s.begin and j.completion > s.begin:
                assert pri[j.task_id] <= pri[s.task_id] or j.task_id == s.task_id, (
                    f"higher-priority task {j.task_id} ready while {s.task_id} runs"
                )
    for a, b in trace.idle:
        for j in jobs:
            assert not (j.arrival < b and j.completion > a and
                        j.arrival <= a < j.completion), (
                f"job {j} ready during idle [{a},{b})"
            )


class TestGoldenSchedule:
    def test_busy_intervals(self):
        trace = simulate(EXAMPLE_SET, 30)
        assert busy_intervals(trace)[:4] == [
            BusyInterval(0, 8), BusyInterval(10, 6),
            BusyInterval(18, 5), BusyInterval(24, 3),
        ]

    def test_low_priority_slices(self):
        trace = simulate(EXAMPLE_SET, 30)
        t3 = [(s.begin, s.end) for s in trace.slices if s.task_id == 3 and s.begin < 30]
        assert t3 == [(3, 5), (11, 12), (14, 15), (21, 23)]

    def test_job_start_times(self):
        trace = simulate(EXAMPLE_SET, 30)
        starts = {tid: [j.start for j in js if j.start < 30]
                  for tid, js in trace.jobs.items()}
        assert starts[1] == [0, 5, 10, 15, 20, 25]
        assert starts[2] == [1, 6, 12, 18, 24]
        assert starts[3] == [3, 11, 21]

    def test_zero_offset_trace_is_hyper_periodic(self):
        trace = simulate(EXAMPLE_SET, 60)
        first = [(s.begin, s.end, s.task_id) for s in trace.slices if s.end <= 30]
        second = [(s.begin - 30, s.end - 30, s.task_id)
                  for s in trace.slices if 30 <= s.begin and s.end <= 60]
        assert first == second


class TestSimulateBasics:
    def test_empty_taskset(self):
        trace = simulate(TaskSet(()), 50)
        assert trace.slices == ()
        assert trace.idle == ((0, 50),)

    def test_single_task_no_contention(self):
        ts = TaskSet((TaskSpec(1, 10, 2, 2, 3, 1),))
        trace = simulate(ts, 20)
        assert [(s.begin, s.end) for s in trace.slices] == [(3, 5), (13, 15)]

    def test_unschedulable_raises(self):
        ts = rm_priorities(
            TaskSet((TaskSpec(1, 4, 2, 2, 0, 2), TaskSpec(2, 6, 3, 3, 0, 1)))
        )
        with pytest.raises(SimulationError):
            simulate(ts, 24)

    def test_variation_deterministic(self):
        var = VariationModel(kind="truncated_normal")
        ts = generate_taskset(GenConfig(n_tasks=4, util_range=(0.4, 0.5), rng_seed=8))
        a = simulate(ts, ts.hyper_period, var, seed=5)
        b = simulate(ts, ts.hyper_period, var, seed=5)
        assert a.slices == b.slices
        assert a.jobs == b.jobs

    def test_arrival_at_horizon_extends_busy_run(self):
        # the run in flight at the horizon is recorded to completion
        ts = TaskSet((TaskSpec(1, 10, 2, 2, 8, 1),))
        trace = simulate(ts, 10)
        assert trace.end >= 10
        assert busy_intervals(trace)[0] == BusyInterval(8, 2)


class TestSampleExecTime:
    def test_no_variation(self):
        t = TaskSpec(1, 20, 10, 8, 0, 1)
        assert sample_exec_time(t, NO_VARIATION, np.random.default_rng(0)) == 8

    def test_truncated_normal_bounds_and_spread(self):
        t = TaskSpec(1, 20, 10, 8, 0, 1)
        var = VariationModel(kind="truncated_normal")
        rng = np.random.default_rng(123)
        samples = np.array([sample_exec_time(t, var, rng) for _ in range(100_000)])
        assert samples.min() >= 6 and samples.max() <= 10
        within = np.mean(np.abs(samples - 8) <= 1)
        assert within >= 0.95
        assert abs(samples.mean() - 8.0) < 0.05

    def test_degenerate_sigma(self):
        t = TaskSpec(1, 20, 8, 8, 0, 1)
        var = VariationModel(kind="truncated_normal")
        assert sample_exec_time(t, var, np.random.default_rng(0)) == 8


class TestObserverView:
    def test_all_idle(self):
        assert busy_intervals(simulate(TaskSet(()), 10)) == []

    def test_clip_drops_edge_crossers(self):
        ivs = [BusyInterval(0, 8), BusyInterval(10, 6)]
        assert clip_observation(ivs, ObservationWindow(0, 12)) == [BusyInterval(0, 8)]

    def test_clip_identity_when_covering(self):
        ivs = [BusyInterval(0, 8), BusyInterval(10, 6)]
        assert clip_observation(ivs, ObservationWindow(0, 30)) == ivs

    def test_clip_empty_window(self):
        ivs = [BusyInterval(0, 8), BusyInterval(10, 6)]
        assert clip_observation(ivs, ObservationWindow(9, 1)) == []


class TestScheduleProperties:
    @given(st.integers(0, 2**32 - 1), st.integers(0, 9))
    @settings(max_examples=30, deadline=None)
    def test_replay_and_interval_composition(self, seed, bin_index):
        lo, hi = 0.001 + 0.1 * bin_index, 0.1 + 0.1 * bin_index
        ts = generate_taskset(GenConfig(n_tasks=3, util_range=(lo, hi),
                                        rng_seed=seed,
                                        period_factors=(2, 3, 5, 7)))
        trace = simulate(ts, ts.hyper_period, seed=seed)
        replay_check(ts, trace)
        # slices are disjoint and time-ordered
        for a, b in zip(trace.slices, trace.slices[1:]):
            assert a.end <= b.begin
        # busy intervals tile the complement of idle
        ivs = busy_intervals(trace)
        covered = sum(iv.length for iv in ivs)
        idle = sum(b - a for a, b in trace.idle)
        assert covered + idle == trace.end
        # every interval's length equals the execution it contains
        for iv in ivs:
            inside = sum(
                s.end - s.begin for s in trace.slices
                if s.begin >= iv.start and s.end <= iv.end
            )
            assert inside == iv.length

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_variation_respects_deadlines(self, seed):
        ts = generate_taskset(GenConfig(n_tasks=4, util_range=(0.5, 0.7),
                                        rng_seed=seed))
        var = VariationModel(kind="truncated_normal")
        trace = simulate(ts, ts.hyper_period, var, seed=seed)
        for tid, jobs in trace.jobs.items():
            p = ts.by_id(tid).period
            for j in jobs:
                assert j.completion <= j.arrival + p
