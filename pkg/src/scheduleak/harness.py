"""Experiment driver: end-to-end pipeline runs and deterministic sweeps.

Every experiment derives its random streams from (master_seed, bin, index)
only, so sweep output is byte-identical across reruns and worker counts.
"""

from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .generator import GenConfig, generate_taskset, harmonic_pair_count
from .metrics import PrecisionReport, naive_baseline, precision_ratio
from .model import BusyInterval, TaskSet, TaskSpec, Trace
from .refine import InferenceState, build_state, refine_fixpoint
from .simulator import (
    NO_VARIATION,
    ObservationWindow,
    VariationModel,
    busy_intervals,
    clip_observation,
    simulate,
)
from .translate import ReconstructedSchedule, reconstruct

#: the ten utilization groups used throughout the evaluation
UTIL_BINS: tuple[tuple[float, float], ...] = tuple(
    (0.001 + 0.1 * x, 0.1 + 0.1 * x) for x in range(10)
)

CSV_COLUMNS = (
    "seed,bin,n_tasks,utilization,variation,obs_fraction,"
    "eta_prime,eta_prime_bi,eta_naive,mean_sd,forced,conflicts,"
    "harmonic_pairs,runtime_ms,error"
)


def prepare_tasksets(
    taskset: TaskSet, variation: VariationModel
) -> tuple[TaskSet, TaskSet]:
    """Derive the simulation-side and attack-side task sets for a condition.

    Without variation the attack matches interval lengths exactly, so its
    tolerance bounds are zeroed.  With variation the mean fraction fixes the
    average execution time, and the attack's deviation bound is the clamp
    range, reduced where needed to keep a positive effective execution time.
    """
    if variation.kind == "none":
        sim = taskset
        attack = TaskSet(
            tuple(replace(t, gamma=0, theta=0) for t in taskset.tasks)
        )
        return sim, attack
    tasks = []
    for t in taskset.tasks:
        acet = max(1, round(variation.mean_fraction * t.wcet))
        theta = variation.arrival_jitter
        gamma = max(0, min(t.wcet - acet, acet - 1 - 2 * theta))
        tasks.append(replace(t, acet=acet, gamma=gamma, theta=theta))
    ts = TaskSet(tuple(tasks))
    return ts, ts


def observed_intervals(trace: Trace, window: ObservationWindow) -> list[BusyInterval]:
    """The observer's captured intervals: complete ones inside the window."""
    return clip_observation(busy_intervals(trace), window)


def attack(
    taskset: TaskSet,
    intervals: list[BusyInterval],
    max_iterations: int = 16,
) -> tuple[InferenceState, ReconstructedSchedule]:
    """Decompose, refine, and translate one set of captured intervals."""
    state = build_state(taskset, intervals)
    state = refine_fixpoint(taskset, intervals, state, max_iterations)
    return state, reconstruct(taskset, intervals, state)


@dataclass
class PipelineResult:
    report: PrecisionReport
    report_bi: PrecisionReport
    trace: Trace
    intervals: list[BusyInterval]
    state: InferenceState
    schedule: ReconstructedSchedule
    diagnostics: dict


def run_pipeline(
    taskset: TaskSet,
    variation: VariationModel = NO_VARIATION,
    observation_fraction: float = 1.0,
    seed: int = 0,
    max_iterations: int = 16,
) -> PipelineResult:
    """simulate -> observe -> decompose -> windows -> refine -> translate -> score."""
    t0 = time.perf_counter()
    hp = taskset.hyper_period
    window = ObservationWindow(0, max(1, round(observation_fraction * hp)))
    sim_ts, attack_ts = prepare_tasksets(taskset, variation)
    trace = simulate(sim_ts, horizon=window.end, variation=variation, seed=seed)
    kept = observed_intervals(trace, window)
    state, schedule = attack(attack_ts, kept, max_iterations)
    report = precision_ratio(trace, schedule, taskset, window)
    report_bi = precision_ratio(trace, schedule, taskset, window, within=kept)
    diagnostics = {
        "iterations": state.iterations,
        "forced": state.forced_matches,
        "conflicts": state.conflicts,
        "degenerate_skips": state.degenerate_skips,
        "dropped_jobs": schedule.flags.dropped_jobs,
        "overflows": schedule.flags.overflows,
        "unconverged": schedule.flags.unconverged,
        "no_observations": not kept,
        "runtime_s": time.perf_counter() - t0,
    }
    return PipelineResult(report, report_bi, trace, kept, state, schedule, diagnostics)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepConfig:
    kind: str  # utilization | variation | task_count | observation
    util_bins: tuple[tuple[float, float], ...] = UTIL_BINS
    sets_per_bin: int = 20
    n_tasks: int = 10
    task_count_range: tuple[int, int] = (10, 15)
    variation: str = "none"  # "none" or "normal-<fraction>"
    mean_fractions: tuple[float, ...] = (0.8, 0.6)
    observation_fractions: tuple[float, ...] = (0.1, 0.25, 0.5, 1.0, 2.0)
    master_seed: int = 0
    workers: int = 1
    timing: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("utilization", "variation", "task_count", "observation"):
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if self.sets_per_bin < 1:
            raise ValueError("sets_per_bin must be >= 1")
        for f in self.observation_fractions:
            if not 0 < f <= 2:
                raise ValueError("observation fractions must lie in (0, 2]")


def parse_variation(token: str) -> VariationModel:
    if token == "none":
        return NO_VARIATION
    if token.startswith("normal-"):
        return VariationModel(kind="truncated_normal", mean_fraction=float(token[7:]))
    raise ValueError(f"unknown variation token {token!r}")


def _experiments(config: SweepConfig) -> list[dict]:
    out = []
    for b, bounds in enumerate(config.util_bins):
        for i in range(config.sets_per_bin):
            base = dict(bin_index=b, bin=bounds, set_index=i,
                        n_tasks=config.n_tasks, variation=config.variation,
                        obs_fraction=1.0, master_seed=config.master_seed,
                        timing=config.timing)
            if config.kind == "utilization":
                out.append(base)
            elif config.kind == "variation":
                for frac in config.mean_fractions:
                    out.append(dict(base, variation=f"normal-{frac}"))
            elif config.kind == "task_count":
                lo, hi = config.task_count_range
                for n in range(lo, hi + 1):
                    out.append(dict(base, n_tasks=n))
            else:  # observation
                for f in config.observation_fractions:
                    out.append(dict(base, obs_fraction=f))
    return out


def _run_experiment(spec: dict) -> dict:
    entropy = (spec["master_seed"], spec["bin_index"], spec["set_index"])
    gen_seed, sim_seed, naive_seed = (
        int(s) for s in np.random.SeedSequence(entropy).generate_state(3, np.uint64)
    )
    lo, hi = spec["bin"]
    row = dict(
        seed=gen_seed,
        bin=f"{lo:.3f}-{hi:.3f}",
        n_tasks=spec["n_tasks"],
        variation=spec["variation"],
        obs_fraction=spec["obs_fraction"],
    )
    t0 = time.perf_counter()
    try:
        taskset = generate_taskset(
            GenConfig(n_tasks=spec["n_tasks"], util_range=(lo, hi), rng_seed=gen_seed)
        )
        variation = parse_variation(spec["variation"])
        result = run_pipeline(
            taskset, variation, spec["obs_fraction"], seed=sim_seed
        )
        naive = naive_baseline(taskset, result.intervals, seed=naive_seed)
        naive_report = precision_ratio(
            result.trace, naive, taskset,
            ObservationWindow(0, max(1, round(spec["obs_fraction"] * taskset.hyper_period))),
        )
        sds = [tp.sd for tp in result.report.per_task]
        row.update(
            utilization=f"{taskset.utilization:.6f}",
            eta_prime=f"{result.report.eta_prime:.6f}",
            eta_prime_bi=f"{result.report_bi.eta_prime:.6f}",
            eta_naive=f"{naive_report.eta_prime:.6f}",
            mean_sd=f"{sum(sds) / len(sds):.4f}",
            forced=result.diagnostics["forced"],
            conflicts=result.diagnostics["conflicts"],
            harmonic_pairs=harmonic_pair_count(taskset),
            error="",
        )
    except Exception as exc:  # recorded, never aborts the sweep
        row.update(
            utilization="", eta_prime="", eta_prime_bi="", eta_naive="",
            mean_sd="", forced="", conflicts="", harmonic_pairs="",
            error=type(exc).__name__,
        )
    ms = int(round((time.perf_counter() - t0) * 1000)) if spec["timing"] else 0
    row["runtime_ms"] = ms
    return row


def run_sweep(config: SweepConfig, out: str | Path | None = None) -> list[dict]:
    """Run all experiments of a sweep; write CSV when ``out`` is given."""
    specs = _experiments(config)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_run_experiment, specs, chunksize=4))
    else:
        rows = [_run_experiment(s) for s in specs]
    if out is not None:
        Path(out).write_text(format_sweep_csv(rows), encoding="utf-8")
    return rows


def _fmt_row(row: dict) -> str:
    keys = ("seed", "bin", "n_tasks", "utilization", "variation", "obs_fraction",
            "eta_prime", "eta_prime_bi", "eta_naive", "mean_sd", "forced",
            "conflicts", "harmonic_pairs", "runtime_ms", "error")
    return ",".join(str(row[k]) for k in keys)


def format_sweep_csv(rows: list[dict]) -> str:
    lines = [CSV_COLUMNS]
    lines += [_fmt_row(r) for r in rows]
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r["eta_prime"] == "":
            continue
        key = (r["bin"], r["variation"], r["n_tasks"], r["obs_fraction"])
        groups.setdefault(key, []).append(float(r["eta_prime"]))
    lines.append("# aggregates: bin,variation,n_tasks,obs_fraction,mean,sd,min,median,max")
    for key in sorted(groups, key=lambda k: (str(k[0]), str(k[1]), k[2], k[3])):
        vals = groups[key]
        sd = statistics.pstdev(vals) if len(vals) > 1 else 0.0
        lines.append(
            "aggregate,{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}".format(
                key[0], key[1], key[2],
                sum(vals) / len(vals), sd, min(vals),
                statistics.median(vals), max(vals),
            )
        )
    return "\n".join(lines) + "\n"


def aggregate_eta(rows: list[dict], **match) -> list[float]:
    """eta_prime values from rows matching the given column values."""
    out = []
    for r in rows:
        if r["eta_prime"] == "":
            continue
        if all(str(r[k]) == str(v) for k, v in match.items()):
            out.append(float(r["eta_prime"]))
    return out
