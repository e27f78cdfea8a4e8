"""Command-line front end.

Scenario configs (flat key=value text) in; schedules, analysis reports,
CSV sweeps, Monte Carlo estimates and trace-evaluation distributions
out.  Exit codes: 0 success, 1 infeasible or domain error, 2 usage or
parse error.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
from dataclasses import dataclass

from .errors import (ConfigError, InfeasibleScheduleError, MpfecError,
                     TraceFormatError, TraceResolutionError)
from .fec import FecParams
from .gilbert import PathModel
from .optimize import (effective_loss, gamma, minimize_tfec,
                       optimize_immediate, optimize_spread)
from .schedule import (PathSet, Schedule, build_immediate, build_spread,
                       check_feasible, schedule_from_text, schedule_to_text,
                       t_fec)
from .sim import (Trace, chunk_trace, filter_traces, generate_traces,
                  load_trace, mc_effective_loss, oracle_vs_prediction,
                  save_trace)


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario config."""

    fec: FecParams
    T: float
    paths: PathSet


def parse_config(text: str) -> Scenario:
    """Parse the flat key=value scenario format.

    Keys: n, k, systematic, T_us, R, and per path 1..R: path<i>.loss,
    path<i>.burst_us, path<i>.delay_us, path<i>.capacity (optional).
    Times are integer microseconds.  '#' starts a comment.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, val = (part.strip() for part in line.split("=", 1))
        if not key or not val:
            raise ConfigError(f"empty key or value in {line!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        values[key] = val

    def take(key, conv, required=True, default=None):
        if key not in values:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return default
        try:
            return conv(values.pop(key))
        except ValueError:
            raise ConfigError(f"invalid value for {key!r}")

    def boolean(v):
        low = v.lower()
        if low in ("1", "true", "yes"):
            return True
        if low in ("0", "false", "no"):
            return False
        raise ValueError(v)

    n = take("n", int)
    k = take("k", int)
    systematic = take("systematic", boolean, required=False, default=True)
    T = take("T_us", int) / 1e6
    count = take("R", int)
    if count < 1:
        raise ConfigError("R must be >= 1")
    paths = []
    for i in range(1, count + 1):
        loss = take(f"path{i}.loss", float)
        burst = take(f"path{i}.burst_us", int) / 1e6
        delay = take(f"path{i}.delay_us", int, required=False, default=0) / 1e6
        cap = take(f"path{i}.capacity", int, required=False)
        try:
            paths.append(PathModel(loss, burst, delay, cap))
        except ValueError as exc:
            raise ConfigError(f"path{i}: {exc}")
    if values:
        raise ConfigError(f"unknown keys: {', '.join(sorted(values))}")
    try:
        fec = FecParams(n, k, systematic)
    except ValueError as exc:
        raise ConfigError(str(exc))
    return Scenario(fec, T, PathSet(tuple(paths)))


def load_config(path: str) -> Scenario:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")


def _parse_rates(text: str, sc: Scenario) -> tuple[int, ...]:
    try:
        rates = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"invalid rates {text!r}; expected e.g. '7,3'")
    if len(rates) != sc.paths.count:
        raise ConfigError(f"need {sc.paths.count} rates, got {len(rates)}")
    return rates


def _build_or_load(args, sc: Scenario) -> tuple[Schedule, float]:
    """Resolve the schedule requested on the command line.

    Returns (schedule, t_fec_max); for built schedules without an
    explicit budget the budget is the schedule's own block delay.
    """
    if getattr(args, "schedule", None):
        try:
            with open(args.schedule) as fh:
                return schedule_from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read schedule {args.schedule}: {exc}")
        except ValueError as exc:
            raise ConfigError(f"{args.schedule}: {exc}")
    if not args.rates:
        raise ConfigError("need --rates (or --schedule) to define a schedule")
    rates = _parse_rates(args.rates, sc)
    budget_us = getattr(args, "t_fec_max_us", None)
    if args.kind == "immediate":
        s = build_immediate(rates, sc.fec, sc.T, sc.paths)
        budget = budget_us / 1e6 if budget_us else t_fec(s, sc.paths)
        return s, budget
    if budget_us:
        budget = budget_us / 1e6
    else:
        imm = build_immediate(rates, sc.fec, sc.T, sc.paths)
        budget = t_fec(imm, sc.paths)
    return build_spread(rates, sc.fec, sc.T, sc.paths, budget), budget


class _Output:
    """stdout or --out file."""

    def __init__(self, path: str | None):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


def _fmt_rates(rates) -> str:
    return ":".join(str(r) for r in rates)


# -- subcommands ---------------------------------------------------------------

def cmd_analyze(args) -> int:
    sc = load_config(args.config)
    s, budget = _build_or_load(args, sc)
    report = check_feasible(s, sc.paths, budget)
    with _Output(args.out) as out:
        print(f"feasible={report.describe()}", file=out)
        if not report:
            return 1
        loss = effective_loss(s, sc.paths, args.backend)
        print(f"pi_b_star={loss:.10g}", file=out)
        print(f"t_fec_us={t_fec(s, sc.paths) * 1e6:.3f}", file=out)
    return 0


def cmd_schedule(args) -> int:
    sc = load_config(args.config)
    s, budget = _build_or_load(args, sc)
    with _Output(args.out) as out:
        out.write(schedule_to_text(s, budget))
    return 0


def cmd_optimize(args) -> int:
    sc = load_config(args.config)
    res = gamma(sc.fec, sc.T, sc.paths, backend=args.backend)
    with _Output(args.out) as out:
        print("kind,rates,t_fec_us,loss,gamma", file=out)
        imm, spr = res.immediate, res.spread
        print(f"immediate,{_fmt_rates(imm.rates)},{imm.t_fec * 1e6:.3f},"
              f"{imm.loss:.10g},", file=out)
        print(f"spread,{_fmt_rates(spr.rates)},{spr.t_fec * 1e6:.3f},"
              f"{spr.loss:.10g},{res.gamma:.6g}", file=out)
        if args.min_tfec:
            budget, gain = minimize_tfec(sc.fec, sc.T, sc.paths,
                                         backend=args.backend)
            print(f"# min_t_fec_us={budget * 1e6:.3f} gain_us={gain * 1e6:.3f}",
                  file=out)
    return 0


_SWEEP_PARAMS = ("dt", "T", "n", "loss2")


def _sweep_scenario(sc: Scenario, param: str, value: float) -> tuple[Scenario, float]:
    """One grid point: return the modified scenario and the value to
    report in the CSV (times in microseconds)."""
    fec, T, paths = sc.fec, sc.T, list(sc.paths.paths)
    if param == "dt":
        if len(paths) < 2:
            raise ConfigError("dt sweep needs at least two paths")
        dt = value / 1e6
        base = paths[0].prop_delay
        paths = [paths[0]] + [
            PathModel(p.loss_rate, p.mean_burst, base + dt, p.capacity)
            for p in paths[1:]]
    elif param == "T":
        T = value / 1e6
    elif param == "n":
        n = int(value)
        fec = FecParams(n, n - (sc.fec.n - sc.fec.k), sc.fec.systematic)
    elif param == "loss2":
        if len(paths) < 2:
            raise ConfigError("loss2 sweep needs at least two paths")
        p = paths[1]
        paths[1] = PathModel(value, p.mean_burst, p.prop_delay, p.capacity)
    else:
        raise ConfigError(f"unknown sweep parameter {param!r}; "
                          f"one of {', '.join(_SWEEP_PARAMS)}")
    return Scenario(fec, T, PathSet(tuple(paths))), value


def _sweep_grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise ConfigError("sweep step must be > 0")
    grid = []
    v = start
    while v <= stop + step * 1e-9:
        grid.append(v)
        v += step
    return grid


def cmd_sweep(args) -> int:
    sc = load_config(args.config)
    with _Output(args.out) as out:
        print("param,imm_loss,spr_loss,gamma,imm_rates,spr_rates,"
              "t_fec_imm,t_fec_spr", file=out)
        for value in _sweep_grid(args.start, args.stop, args.step):
            point, reported = _sweep_scenario(sc, args.param, value)
            try:
                res = gamma(point.fec, point.T, point.paths,
                            backend=args.backend)
            except InfeasibleScheduleError:
                continue
            imm, spr = res.immediate, res.spread
            print(f"{reported:.10g},{imm.loss:.10g},{spr.loss:.10g},"
                  f"{res.gamma:.10g},{_fmt_rates(imm.rates)},"
                  f"{_fmt_rates(spr.rates)},{imm.t_fec * 1e6:.3f},"
                  f"{spr.t_fec * 1e6:.3f}", file=out)
    return 0


def cmd_simulate(args) -> int:
    sc = load_config(args.config)
    s, _ = _build_or_load(args, sc)
    estimate, std_error = mc_effective_loss(
        s, sc.paths, args.blocks, args.seed,
        workers=args.workers, backend=args.backend)
    with _Output(args.out) as out:
        print(f"blocks={args.blocks}", file=out)
        print(f"seed={args.seed}", file=out)
        print(f"pi_b_star_mc={estimate:.10g}", file=out)
        print(f"std_error={std_error:.6g}", file=out)
    return 0


def _collect_trace_files(sources) -> list[str]:
    files = []
    for src in sources:
        if os.path.isdir(src):
            files.extend(sorted(
                os.path.join(src, f) for f in os.listdir(src)
                if not f.startswith(".")))
        else:
            files.append(src)
    if not files:
        raise ConfigError("no trace files found")
    return files


def _percentiles(values) -> str:
    clean = sorted(v for v in values if math.isfinite(v))
    if not clean:
        return "empty"
    med = statistics.median(clean)
    p10 = clean[int(0.10 * (len(clean) - 1))]
    p90 = clean[int(0.90 * (len(clean) - 1))]
    return f"p10={p10:.4g} median={med:.4g} p90={p90:.4g} count={len(values)}"


def cmd_trace(args) -> int:
    sc = load_config(args.config)
    traces = [load_trace(f) for f in _collect_trace_files(args.traces)]
    traces = filter_traces(traces, args.max_burst_us / 1e6)
    if len(traces) < 2:
        raise ConfigError("need at least two accepted traces to form a pair")
    pairs = [(traces[i], traces[i + 1]) for i in range(0, len(traces) - 1, 2)]
    res = oracle_vs_prediction(pairs, sc.fec, sc.T, args.dt_us / 1e6,
                               chunk_seconds=args.chunk_seconds)
    with _Output(args.out) as out:
        print("kind,gamma", file=out)
        for g in res.oracle:
            print(f"oracle,{g:.10g}", file=out)
        for g in res.prediction:
            print(f"prediction,{g:.10g}", file=out)
    print(f"evaluated={res.evaluated} excluded={res.excluded}", file=sys.stderr)
    print(f"oracle: {_percentiles(res.oracle)}", file=sys.stderr)
    print(f"prediction: {_percentiles(res.prediction)}", file=sys.stderr)
    return 0


def cmd_gen_traces(args) -> int:
    model = PathModel(args.loss, args.burst_us / 1e6)
    traces = generate_traces(model, args.interval_us / 1e6,
                             args.duration, args.count, args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    for i, tr in enumerate(traces):
        save_trace(tr, os.path.join(args.out_dir, f"trace_{i:04d}.txt"))
    print(f"wrote {len(traces)} traces to {args.out_dir}", file=sys.stderr)
    return 0


# -- argument parsing ----------------------------------------------------------

def _add_schedule_args(p):
    p.add_argument("--schedule", help="schedule file to load")
    p.add_argument("--kind", choices=("immediate", "spread"),
                   default="immediate", help="built-in schedule family")
    p.add_argument("--rates", help="comma-separated per-path rates, e.g. 7,3")
    p.add_argument("--t-fec-max-us", type=float, dest="t_fec_max_us",
                   help="block delay budget in microseconds (spread)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpfec",
        description="Effective loss rate of FEC-protected multipath "
                    "transmission: analysis, optimization, simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", help="write output to this file instead of stdout")
        p.add_argument("--backend", choices=("compiled", "python"),
                       help="force a computation backend")

    p = sub.add_parser("analyze", help="effective loss rate of one schedule")
    common(p)
    _add_schedule_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("schedule", help="emit a schedule file")
    common(p)
    _add_schedule_args(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("optimize", help="optimal Immediate and Spread rates")
    common(p)
    p.add_argument("--min-tfec", action="store_true",
                   help="also report the minimal equal-loss Spread budget")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="CSV sweep over one parameter")
    common(p)
    p.add_argument("--param", required=True, choices=_SWEEP_PARAMS,
                   help="dt/T in microseconds, n integer, loss2 fraction")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo estimate for one schedule")
    common(p)
    _add_schedule_args(p)
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("trace", help="Oracle/Prediction evaluation on traces")
    common(p)
    p.add_argument("--traces", nargs="+", required=True,
                   help="trace files or directories")
    p.add_argument("--dt-us", type=float, required=True, dest="dt_us",
                   help="path delay difference in microseconds")
    p.add_argument("--chunk-seconds", type=float, default=40.0)
    p.add_argument("--max-burst-us", type=float, default=100_000,
                   dest="max_burst_us",
                   help="reject traces with a loss run this long or longer")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("gen-traces", help="write synthetic loss traces")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--duration", type=float, required=True,
                   help="trace duration in seconds")
    p.add_argument("--interval-us", type=float, default=5000,
                   dest="interval_us")
    p.add_argument("--loss", type=float, default=0.01)
    p.add_argument("--burst-us", type=float, default=10_000, dest="burst_us")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_traces)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.blocks < 1:
        parser.error("--blocks must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MpfecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
