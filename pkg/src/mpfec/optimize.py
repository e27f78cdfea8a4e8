"""Rate optimization for the Immediate and Spread schedules, the
Spread-over-Immediate improvement ratio, block-delay minimization and a
grid search over unconstrained departure times.

Rate searches are exhaustive over the integer compositions of n; all
tie-breaks are fixed (smaller loss, then smaller block transmission
time, then lexicographically smaller rates) so results are
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import evenfast, exact
from .errors import InfeasibleScheduleError
from .fec import FecParams
from .schedule import (PathSet, Schedule, build_immediate, build_spread,
                       check_feasible, t_fec)


@dataclass(frozen=True)
class EvalReport:
    """Outcome of evaluating one optimized schedule."""

    scenario: str
    kind: str                  # "immediate" | "spread"
    rates: tuple[int, ...]
    t_fec: float
    loss: float
    gamma: float | None = None
    schedule: Schedule | None = None

    def __post_init__(self):
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError(f"loss out of range: {self.loss}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class GammaResult:
    immediate: EvalReport
    spread: EvalReport
    gamma: float


def effective_loss(s: Schedule, ps: PathSet, backend: str | None = None) -> float:
    """Route to the even-spacing evaluator when the schedule qualifies,
    otherwise to full enumeration."""
    if evenfast.admissible(s):
        if s.fec.systematic:
            return evenfast.effective_loss_even(s, ps, backend)
        return evenfast.effective_loss_even_nonsystematic(s, ps, backend)
    return exact.effective_loss_exact(s, ps, backend)


def compositions(n: int, parts: int, capacities=None):
    """All (n_1..n_parts) with sum n and 0 <= n_i <= capacity_i, in
    lexicographic order."""
    caps = [n if c is None else min(c, n) for c in (capacities or [None] * parts)]
    if len(caps) != parts:
        raise ValueError("need one capacity per part")

    def rec(prefix, remaining, idx):
        if idx == parts - 1:
            if remaining <= caps[idx]:
                yield prefix + (remaining,)
            return
        for v in range(min(remaining, caps[idx]) + 1):
            yield from rec(prefix + (v,), remaining - v, idx + 1)

    yield from rec((), n, 0)


def _resolve_caps(ps: PathSet, capacities):
    return list(ps.capacities()) if capacities is None else list(capacities)


def optimize_immediate(fec: FecParams, T: float, ps: PathSet,
                       capacities=None, scenario: str = "",
                       backend: str | None = None) -> EvalReport:
    """Exhaustive rate search over Immediate schedules.

    Candidates are scored with the even-spacing formula on per-path
    counts (exact for equal-rate and single-path candidates, the
    constant-spacing approximation otherwise)."""
    best = None
    for rates in compositions(fec.n, ps.count, _resolve_caps(ps, capacities)):
        s = build_immediate(rates, fec, T, ps)
        loss = evenfast.even_loss_rates(s, ps, backend)
        key = (loss, t_fec(s, ps), rates)
        if best is None or key < best[0]:
            best = (key, s)
    if best is None:
        raise InfeasibleScheduleError("no composition satisfies the capacities")
    (loss, tf, rates), s = best
    return EvalReport(scenario, "immediate", rates, tf, loss, schedule=s)


def optimize_spread(fec: FecParams, T: float, ps: PathSet, t_fec_max: float,
                    capacities=None, scenario: str = "",
                    backend: str | None = None) -> EvalReport:
    """Exhaustive rate search over Spread schedules under the given
    block transmission time budget; infeasible compositions skipped."""
    best = None
    for rates in compositions(fec.n, ps.count, _resolve_caps(ps, capacities)):
        try:
            s = build_spread(rates, fec, T, ps, t_fec_max)
        except InfeasibleScheduleError:
            continue
        loss = effective_loss(s, ps, backend)
        key = (loss, t_fec(s, ps), rates)
        if best is None or key < best[0]:
            best = (key, s)
    if best is None:
        raise InfeasibleScheduleError(
            f"no feasible composition under t_fec_max={t_fec_max}")
    (loss, tf, rates), s = best
    return EvalReport(scenario, "spread", rates, tf, loss, schedule=s)


def gamma(fec: FecParams, T: float, ps: PathSet, capacities=None,
          scenario: str = "", backend: str | None = None) -> GammaResult:
    """Optimize Immediate, give Spread the same block-delay budget,
    optimize it, and report the loss-rate improvement ratio."""
    imm = optimize_immediate(fec, T, ps, capacities, scenario, backend)
    spr = optimize_spread(fec, T, ps, imm.t_fec, capacities, scenario, backend)
    ratio = imm.loss / spr.loss if spr.loss > 0.0 else math.inf
    return GammaResult(immediate=imm,
                       spread=EvalReport(scenario, "spread", spr.rates,
                                         spr.t_fec, spr.loss, gamma=ratio,
                                         schedule=spr.schedule),
                       gamma=ratio)


def minimize_tfec(fec: FecParams, T: float, ps: PathSet, capacities=None,
                  tolerance: float = 1e-4,
                  backend: str | None = None) -> tuple[float, float]:
    """Smallest Spread block-delay budget whose optimized loss does not
    exceed the optimized Immediate loss.  Returns (budget, gain)."""
    imm = optimize_immediate(fec, T, ps, capacities, backend=backend)
    target = imm.loss * (1.0 + 1e-12)

    def ok(budget: float) -> bool:
        try:
            spr = optimize_spread(fec, T, ps, budget, capacities, backend=backend)
        except InfeasibleScheduleError:
            return False
        return spr.loss <= target

    hi = imm.t_fec
    if not ok(hi):
        return hi, 0.0
    lo = (fec.k - 1) * T + min(ps.delays())
    if ok(lo):
        hi = lo
    else:
        while hi - lo > tolerance:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
    return hi, imm.t_fec - hi


def search_unconstrained_schedule(fec: FecParams, ps: PathSet, T: float,
                                  t_fec_max: float, grid: float,
                                  capacities=None,
                                  backend: str | None = None) -> tuple[Schedule, float]:
    """Coordinate descent on departure times over a regular grid,
    scored by full enumeration, starting from each feasible Spread
    schedule.  Never worse than Spread under the same budget."""
    if fec.n > 8:
        raise ValueError("unconstrained search is limited to n <= 8")
    best_s = None
    best_loss = math.inf
    for rates in compositions(fec.n, ps.count, _resolve_caps(ps, capacities)):
        try:
            s = build_spread(rates, fec, T, ps, t_fec_max)
        except InfeasibleScheduleError:
            continue
        loss = exact.effective_loss_exact(s, ps, backend)
        s, loss = _descend(s, ps, t_fec_max, grid, loss, backend)
        if loss < best_loss:
            best_s, best_loss = s, loss
    if best_s is None:
        raise InfeasibleScheduleError(
            f"no feasible composition under t_fec_max={t_fec_max}")
    return best_s, best_loss


def _descend(s: Schedule, ps: PathSet, t_fec_max: float, grid: float,
             loss: float, backend):
    n, k, T = s.fec.n, s.fec.k, s.gen_interval
    for _ in range(50):
        improved = False
        for i in range(n):
            lb = i * T if i < k else (k - 1) * T
            ub = t_fec_max - ps.get(s.paths[i]).prop_delay
            start = math.ceil(lb / grid - 1e-9) * grid
            for t_c in np.arange(start, ub + grid / 2, grid):
                if abs(t_c - s.times[i]) < 1e-12:
                    continue
                times = list(s.times)
                times[i] = float(t_c)
                try:
                    cand = Schedule(tuple(times), s.paths, s.fec, T)
                except ValueError:
                    continue
                if not check_feasible(cand, ps, t_fec_max):
                    continue
                cand_loss = exact.effective_loss_exact(cand, ps, backend)
                if cand_loss < loss - 1e-15:
                    s, loss = cand, cand_loss
                    improved = True
        if not improved:
            break
    return s, loss
