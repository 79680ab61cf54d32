"""Command-line front end: gen, sim, attack, eval, sweep.

Exit codes: 0 success, 1 usage error, 2 infeasible generation, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, metrics, model, refine, simulator, translate
from .generator import GenConfig, GenerationInfeasible, generate_taskset
from .model import FormatError, TaskSet, Tick
from .simulator import NO_VARIATION, ObservationWindow, VariationModel

USAGE_ERROR = 1
INFEASIBLE = 2
IO_ERROR = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _variation_from_args(args) -> VariationModel:
    if args.variation == "none":
        return NO_VARIATION
    return VariationModel(kind="truncated_normal", mean_fraction=args.mean_frac)


def _cmd_gen(args) -> int:
    lo, hi = (float(x) for x in args.util.split(":"))
    cfg = GenConfig(n_tasks=args.n_tasks, util_range=(lo, hi), rng_seed=args.seed)
    try:
        ts = generate_taskset(cfg)
    except GenerationInfeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INFEASIBLE
    if args.out:
        model.write_taskset(ts, args.out)
    else:
        print(model.TASKSET_HEADER)
        for t in ts.tasks:
            print(f"{t.id},{t.period},{t.wcet},{t.acet},{t.offset},"
                  f"{t.priority},{t.gamma},{t.theta}")
    if not args.quiet and args.out:
        print(f"wrote {len(ts)} tasks (U={ts.utilization:.4f}) to {args.out}")
    return 0


def _cmd_sim(args) -> int:
    ts = model.read_taskset(args.taskset)
    variation = _variation_from_args(args)
    horizon = args.horizon if args.horizon else ts.hyper_period
    trace = simulator.simulate(ts, horizon, variation, seed=args.seed)
    if args.trace_out:
        model.write_trace_csv(trace, args.trace_out)
    if args.bi_out:
        model.write_busy_csv(simulator.busy_intervals(trace), args.bi_out)
    if not args.quiet:
        ivs = simulator.busy_intervals(trace)
        print(f"simulated {trace.end} ticks: {sum(len(j) for j in trace.jobs.values())} "
              f"jobs, {len(ivs)} busy intervals")
    return 0


def _cmd_attack(args) -> int:
    ts = model.read_taskset(args.taskset)
    if args.bi is None and not args.from_sim:
        print("error: need --bi <csv> or --from-sim", file=sys.stderr)
        return USAGE_ERROR

    variation = _variation_from_args(args)
    window = ObservationWindow(0, max(1, round(args.observe * ts.hyper_period)))
    if args.from_sim:
        sim_ts, attack_ts = harness.prepare_tasksets(ts, variation)
        trace = simulator.simulate(sim_ts, window.end, variation, seed=args.seed)
        intervals = harness.observed_intervals(trace, window)
    else:
        _, attack_ts = harness.prepare_tasksets(ts, variation)
        intervals = simulator.clip_observation(model.read_busy_csv(args.bi), window)

    state = refine.build_state(attack_ts, intervals)
    if args.verbose:
        for k, (iv, vs) in enumerate(zip(intervals, state.vectors)):
            cands = " ".join("{" + ",".join(map(str, v.counts)) + "}" for v in vs)
            print(f"interval {k} at {iv.start} len {iv.length}: {cands}")
    trace_fn = None
    if args.trace_refinement:
        def trace_fn(it, vecs, wins):
            print(f"iteration {it}: {vecs} candidate vectors, {wins} windows")
    state = refine.refine_fixpoint(attack_ts, intervals, state,
                                   args.max_iters, trace_fn=trace_fn)
    schedule = translate.reconstruct(attack_ts, intervals, state)

    if args.dump_histograms:
        lines = ["task_id,position,count"]
        for task in attack_ts.tasks:
            hist = state.histograms[task.id]
            lines += [f"{task.id},{pos},{int(c)}" for pos, c in enumerate(hist.counts)]
        Path(args.dump_histograms).write_text("\n".join(lines) + "\n", encoding="utf-8")

    out_lines = ["interval_start,task_id,arrival,start"]
    for iv, jobs in zip(intervals, schedule.jobs_by_interval):
        out_lines += [f"{iv.start},{j.task_id},{j.arrival},{j.start}" for j in jobs]
    text = "\n".join(out_lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")

    if args.summary:
        f = schedule.flags
        lines = [
            "committed_arrivals," + ";".join(
                f"{tid}:{a}" for tid, a in sorted(schedule.arrivals.items())
            ),
            f"intervals,{len(intervals)}",
            f"iterations,{state.iterations}",
            f"converged,{int(state.converged)}",
            f"forced_matches,{f.forced_matches}",
            f"conflicts,{f.conflicts}",
            f"dropped_jobs,{f.dropped_jobs}",
            f"overflows,{f.overflows}",
        ]
        Path(args.summary).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if not args.quiet and args.out:
        print(f"reconstructed {sum(len(j) for j in schedule.jobs_by_interval)} jobs "
              f"over {len(intervals)} intervals")
    return 0


def _cmd_eval(args) -> int:
    ts = model.read_taskset(args.taskset)
    slices = model.read_slices_csv(args.trace)
    recon_lines = Path(args.recon).read_text(encoding="utf-8").splitlines()
    if not recon_lines or recon_lines[0].strip() != "interval_start,task_id,arrival,start":
        raise FormatError("expected 'interval_start,task_id,arrival,start' header")
    inferred: dict[int, list[Tick]] = {t.id: [] for t in ts.tasks}
    for ln in recon_lines[1:]:
        if not ln.strip():
            continue
        _, tid, _, start = (int(x) for x in ln.split(","))
        inferred.setdefault(tid, []).append(start)

    span = max((s.end for s in slices), default=1)
    if args.window:
        w_start, w_len = (int(x) for x in args.window.split(":"))
    else:
        w_start, w_len = 0, span
    window = ObservationWindow(w_start, w_len)

    actual = _actual_starts(ts, slices)
    lines = ["# u counts jobs within the observation window",
             "task_id,sd,precision,u,unmatched"]
    import math as _math
    total = 0.0
    for task in ts.tasks:
        a = sorted(t for t in actual[task.id] if window.start <= t < window.end)
        g = sorted(t for t in inferred.get(task.id, []) if window.start <= t < window.end)
        matched = min(len(a), len(g))
        u = max(len(a), len(g))
        if u == 0:
            sd, precision = 0.0, 1.0
        else:
            sq = sum(float(x - y) ** 2 for x, y in zip(a, g))
            sq += (u - matched) * float(task.period) ** 2
            sd = _math.sqrt(sq / u)
            precision = 1.0 - sd / task.period
        total += precision
        lines.append(f"{task.id},{sd:.4f},{precision:.6f},{u},{u - matched}")
    eta = total / len(ts.tasks)
    lines.append(f"eta_prime,{eta:.6f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def _actual_starts(ts: TaskSet, slices: list[model.ExecSlice]) -> dict[int, list[Tick]]:
    """First executing tick of every job, recovered from slices.

    Slices are attributed to jobs by the arrival grid: with deadlines met, a
    job's execution lies entirely within [arrival, arrival + period).
    """
    starts: dict[int, list[Tick]] = {t.id: [] for t in ts.tasks}
    seen: set[tuple[int, int]] = set()
    for s in sorted(slices, key=lambda x: (x.begin, x.task_id)):
        task = ts.by_id(s.task_id)
        b = s.begin
        while b < s.end:
            h = (b - task.offset) // task.period
            fence = task.offset + (h + 1) * task.period
            if (task.id, h) not in seen:
                seen.add((task.id, h))
                starts[task.id].append(b)
            b = min(s.end, fence)
    for v in starts.values():
        v.sort()
    return starts


def _cmd_sweep(args) -> int:
    cfg = harness.SweepConfig(
        kind=args.kind,
        sets_per_bin=args.sets_per_bin,
        n_tasks=args.n_tasks,
        variation=args.variation,
        observation_fractions=tuple(args.fractions),
        master_seed=args.seed,
        workers=args.workers,
        timing=args.timing,
    )
    rows = harness.run_sweep(cfg, out=args.out)
    if not args.quiet:
        ok = sum(1 for r in rows if r["eta_prime"] != "")
        print(f"{ok}/{len(rows)} experiments succeeded"
              + (f"; wrote {args.out}" if args.out else ""))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="scheduleak", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("gen", help="generate a random schedulable task set")
    p.add_argument("--n-tasks", type=int, required=True)
    p.add_argument("--util", type=str, required=True, metavar="LO:HI")
    common(p)

    p = sub.add_parser("sim", help="simulate a task set and export trace data")
    p.add_argument("taskset")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--variation", choices=["none", "normal"], default="none")
    p.add_argument("--mean-frac", type=float, default=0.8)
    p.add_argument("--trace-out", type=str, default=None)
    p.add_argument("--bi-out", type=str, default=None)
    common(p)

    p = sub.add_parser("attack", help="reconstruct a schedule from busy intervals")
    p.add_argument("taskset")
    p.add_argument("--bi", type=str, default=None)
    p.add_argument("--from-sim", action="store_true")
    p.add_argument("--observe", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=16)
    p.add_argument("--variation", choices=["none", "normal"], default="none")
    p.add_argument("--mean-frac", type=float, default=0.8)
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--dump-histograms", type=str, default=None)
    p.add_argument("--trace-refinement", action="store_true")
    p.add_argument("--summary", type=str, default=None)
    common(p)

    p = sub.add_parser("eval", help="score a reconstruction against ground truth")
    p.add_argument("--trace", type=str, required=True)
    p.add_argument("--recon", type=str, required=True)
    p.add_argument("--taskset", type=str, required=True)
    p.add_argument("--window", type=str, default=None, metavar="START:LENGTH")
    common(p)

    p = sub.add_parser("sweep", help="run a deterministic experiment sweep")
    p.add_argument("--kind", choices=["utilization", "variation", "task_count",
                                      "observation"], required=True)
    p.add_argument("--sets-per-bin", type=int, default=20)
    p.add_argument("--n-tasks", type=int, default=10)
    p.add_argument("--variation", type=str, default="none")
    p.add_argument("--fractions", type=float, nargs="+",
                   default=[0.1, 0.25, 0.5, 1.0, 2.0])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true")
    common(p)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    handlers = {
        "gen": _cmd_gen,
        "sim": _cmd_sim,
        "attack": _cmd_attack,
        "eval": _cmd_eval,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
