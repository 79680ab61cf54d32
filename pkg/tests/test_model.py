"""Domain types, invariants, and file formats."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scheduleak.model import (
    BusyInterval,
    ConfigurationError,
    ExecSlice,
    FormatError,
    Job,
    TaskSet,
    TaskSpec,
    hyper_period,
    read_busy_csv,
    read_slices_csv,
    read_taskset,
    slices_to_busy_intervals,
    write_busy_csv,
    write_taskset,
)


def make_taskset(periods):
    # one-tick tasks; periods >= len(periods) keeps total utilization <= 1
    n = len(periods)
    return TaskSet(
        tuple(TaskSpec(i + 1, p, 1, 1, 0, n - i) for i, p in enumerate(periods))
    )


def lcm_by_factorization(values):
    """Independent oracle: lcm via prime factorization with max exponents."""
    exponents: dict[int, int] = {}
    for v in values:
        d, n = 2, v
        while d * d <= n:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            if e:
                exponents[d] = max(exponents.get(d, 0), e)
            d += 1
        if n > 1:
            exponents[n] = max(exponents.get(n, 0), 1)
    out = 1
    for prime, e in exponents.items():
        out *= prime**e
    return out


class TestHyperPeriod:
    def test_worked_example(self):
        assert hyper_period(make_taskset([5, 6, 10])) == 30

    def test_single_task(self):
        assert hyper_period(make_taskset([7])) == 7

    def test_factorization_oracle(self):
        periods = [30030, 2310]
        assert lcm_by_factorization(periods) == 30030
        assert hyper_period(make_taskset(periods)) == 30030

    @given(st.lists(st.integers(6, 200), min_size=1, max_size=6))
    @settings(max_examples=200)
    def test_matches_factorization_oracle(self, periods):
        assert hyper_period(make_taskset(periods)) == lcm_by_factorization(periods)

    def test_empty_rejected(self):
        with pytest.raises(ConfigurationError):
            hyper_period(TaskSet(()))

    def test_overflow_rejected(self):
        big = [2**40 + 1, 2**40 - 1]  # coprime, product overflows the tick cap
        ts = TaskSet(
            tuple(TaskSpec(i + 1, p, 1, 1, 0, i + 1) for i, p in enumerate(big))
        )
        with pytest.raises(ConfigurationError):
            hyper_period(ts)


class TestTaskSpecInvariants:
    def test_valid(self):
        t = TaskSpec(1, 10, 4, 3, 7, 1, gamma=1, theta=0)
        assert t.deadline == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(period=0, wcet=1, acet=1, offset=0),
            dict(period=10, wcet=11, acet=1, offset=0),
            dict(period=10, wcet=4, acet=5, offset=0),
            dict(period=10, wcet=4, acet=0, offset=0),
            dict(period=10, wcet=4, acet=3, offset=10),
            dict(period=10, wcet=4, acet=3, offset=-1),
        ],
    )
    def test_bad_parameters(self, kwargs):
        with pytest.raises(ConfigurationError):
            TaskSpec(id=1, priority=1, **kwargs)

    def test_gamma_below_acet(self):
        with pytest.raises(ConfigurationError):
            TaskSpec(1, 10, 8, 4, 0, 1, gamma=4)


class TestTaskSetInvariants:
    def test_duplicate_ids(self):
        with pytest.raises(ConfigurationError):
            TaskSet((TaskSpec(1, 5, 1, 1, 0, 2), TaskSpec(1, 6, 1, 1, 0, 1)))

    def test_duplicate_priorities(self):
        with pytest.raises(ConfigurationError):
            TaskSet((TaskSpec(1, 5, 1, 1, 0, 1), TaskSpec(2, 6, 1, 1, 0, 1)))

    def test_overutilization(self):
        with pytest.raises(ConfigurationError):
            TaskSet((TaskSpec(1, 4, 2, 2, 0, 2), TaskSpec(2, 6, 3, 3, 0, 1),
                     TaskSpec(3, 8, 2, 2, 0, 3)))

    def test_exact_full_utilization_allowed(self):
        TaskSet((TaskSpec(1, 4, 2, 2, 0, 2), TaskSpec(2, 4, 2, 2, 0, 1)))


class TestJobAndSlices:
    def test_job_ordering_invariant(self):
        with pytest.raises(ConfigurationError):
            Job(1, 0, arrival=5, start=4, completion=6)
        with pytest.raises(ConfigurationError):
            Job(1, 0, arrival=5, start=6, completion=6)

    def test_empty_slice_rejected(self):
        with pytest.raises(ConfigurationError):
            ExecSlice(1, 3, 3)

    def test_busy_interval_positive_length(self):
        with pytest.raises(ConfigurationError):
            BusyInterval(0, 0)

    def test_back_to_back_slices_merge(self):
        slices = [ExecSlice(1, 0, 2), ExecSlice(2, 2, 5), ExecSlice(1, 7, 8)]
        assert slices_to_busy_intervals(slices) == [
            BusyInterval(0, 5),
            BusyInterval(7, 1),
        ]


class TestFileFormats:
    def test_taskset_roundtrip(self, tmp_path):
        ts = TaskSet(
            (TaskSpec(1, 5, 1, 1, 0, 3), TaskSpec(2, 6, 2, 2, 3, 2),
             TaskSpec(3, 10, 2, 2, 9, 1, gamma=1, theta=0))
        )
        path = tmp_path / "ts.txt"
        write_taskset(ts, path)
        text = path.read_text()
        assert text.startswith("# scheduleak-taskset v1\n")
        assert read_taskset(path) == ts

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1,5,1,1,0,3,0,0\n")
        with pytest.raises(FormatError):
            read_taskset(path)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# scheduleak-taskset v1\n1,5,1\n")
        with pytest.raises(FormatError):
            read_taskset(path)

    def test_busy_csv_roundtrip(self, tmp_path):
        ivs = [BusyInterval(0, 8), BusyInterval(10, 6)]
        path = tmp_path / "bi.csv"
        write_busy_csv(ivs, path)
        assert path.read_text().splitlines()[0] == "start,length"
        assert read_busy_csv(path) == ivs

    def test_slices_csv_header(self, tmp_path):
        path = tmp_path / "tr.csv"
        path.write_text("wrong,header,x\n")
        with pytest.raises(FormatError):
            read_slices_csv(path)
