"""Packet schedules: representation, feasibility, and the Immediate and
Spread constructors.

A schedule fixes, for every packet of one FEC block, its departure time
(seconds from the generation of the first data packet) and its path.
Feasibility means: data packets do not leave before they are generated
(C1), redundancy packets do not leave before the last data packet is
generated (C2), and every packet arrives before the block deadline (C3).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import InfeasibleScheduleError
from .fec import FecParams
from .gilbert import PathModel

# tolerance for all time comparisons, seconds
TIME_TOL = 1e-9


@dataclass(frozen=True)
class PathSet:
    """The ordered paths available between source and destination.
    Path indices are 1-based throughout."""

    paths: tuple[PathModel, ...]

    def __post_init__(self):
        if len(self.paths) < 1:
            raise ValueError("need at least one path")

    @property
    def count(self) -> int:
        return len(self.paths)

    def get(self, r: int) -> PathModel:
        if not 1 <= r <= len(self.paths):
            raise IndexError(f"path index {r} out of range 1..{len(self.paths)}")
        return self.paths[r - 1]

    def delays(self) -> tuple[float, ...]:
        return tuple(p.prop_delay for p in self.paths)

    def capacities(self) -> tuple[int | None, ...]:
        return tuple(p.capacity for p in self.paths)


@dataclass(frozen=True)
class Schedule:
    """Departure times and path assignment of the n packets of a block.

    times[i] and paths[i] belong to packet i+1; packets 1..k are data.
    """

    times: tuple[float, ...]
    paths: tuple[int, ...]
    fec: FecParams
    gen_interval: float

    def __post_init__(self):
        n = self.fec.n
        if len(self.times) != n or len(self.paths) != n:
            raise ValueError(f"times/paths must have length n={n}")
        if self.gen_interval <= 0:
            raise ValueError("gen_interval must be > 0")
        if any(t < 0 for t in self.times):
            raise ValueError("departure times must be >= 0")
        for r in set(self.paths):
            ts = [self.times[i] for i in range(n) if self.paths[i] == r]
            if any(b - a <= 0 for a, b in zip(ts, ts[1:])):
                raise ValueError(
                    f"per-path departure times must be strictly ascending (path {r})")

    @cached_property
    def rates(self) -> dict[int, int]:
        """Packets per path (n_r), only for used paths."""
        out: dict[int, int] = {}
        for r in self.paths:
            out[r] = out.get(r, 0) + 1
        return out

    @cached_property
    def data_rates(self) -> dict[int, int]:
        """Data packets per path (k_r), only for used paths."""
        out = {r: 0 for r in self.rates}
        for i in range(self.fec.k):
            out[self.paths[i]] += 1
        return out

    def rate_tuple(self, num_paths: int) -> tuple[int, ...]:
        return tuple(self.rates.get(r, 0) for r in range(1, num_paths + 1))

    def path_times(self, r: int) -> list[float]:
        """Departure times on path r, in packet-index (= time) order."""
        return [self.times[i] for i in range(self.fec.n) if self.paths[i] == r]

    def path_packets(self, r: int) -> list[int]:
        """1-based packet indices on path r, in packet-index order."""
        return [i + 1 for i in range(self.fec.n) if self.paths[i] == r]


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    condition: str | None = None  # "C1" | "C2" | "C3"
    packet: int | None = None     # 1-based index of the first violator

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "feasible"
        return f"{self.condition} violated at packet {self.packet}"


def t_fec(s: Schedule, ps: PathSet) -> float:
    """Block transmission time: latest scheduled arrival."""
    return max(s.times[i] + ps.get(s.paths[i]).prop_delay for i in range(s.fec.n))


def check_feasible(s: Schedule, ps: PathSet, t_fec_max: float) -> FeasibilityReport:
    """Check C1-C3 with TIME_TOL slack; report the first violation."""
    k, T = s.fec.k, s.gen_interval
    for i in range(s.fec.n):
        t = s.times[i]
        if i < k:
            if t < i * T - TIME_TOL:
                return FeasibilityReport(False, "C1", i + 1)
        else:
            if t < (k - 1) * T - TIME_TOL:
                return FeasibilityReport(False, "C2", i + 1)
        if t + ps.get(s.paths[i]).prop_delay > t_fec_max + TIME_TOL:
            return FeasibilityReport(False, "C3", i + 1)
    return FeasibilityReport(True)


def _validate_rates(rates, fec: FecParams, ps: PathSet) -> None:
    if len(rates) != ps.count:
        raise ValueError(f"need one rate per path ({ps.count}), got {len(rates)}")
    if any(r < 0 for r in rates):
        raise ValueError("rates must be >= 0")
    if sum(rates) != fec.n:
        raise ValueError(f"rates must sum to n={fec.n}, got {sum(rates)}")
    for r, n_r in enumerate(rates, start=1):
        cap = ps.get(r).capacity
        if cap is not None and n_r > cap:
            raise ValueError(f"rate {n_r} exceeds capacity {cap} of path {r}")


def build_immediate(rates, fec: FecParams, T: float, ps: PathSet) -> Schedule:
    """Immediate schedule: packet i departs at (i-1)T; paths assigned by
    the credit rule (each step every path's credit grows by n_r/n, the
    largest credit wins and pays 1).  Credit ties go to the path with
    the larger propagation delay, then to the larger index.
    """
    _validate_rates(rates, fec, ps)
    n = fec.n
    credits = [0.0] * ps.count
    assigned: list[int] = []
    for _ in range(n):
        for r in range(ps.count):
            credits[r] += rates[r] / n
        best = max(range(ps.count),
                   key=lambda r: (credits[r], ps.get(r + 1).prop_delay, r))
        credits[best] -= 1.0
        assigned.append(best + 1)
    times = tuple(i * T for i in range(n))
    return Schedule(times, tuple(assigned), fec, T)


def _slot_key(slot):
    # sort by time, ties by smaller path index
    return (slot[0], slot[1])


def _slots_feasible(slots, fec: FecParams, T: float, ps: PathSet,
                    t_fec_max: float) -> bool:
    """Feasibility of a (possibly partial) set of (time, path) slots
    under the earliest-slots-carry-data mapping."""
    k = fec.k
    ordered = sorted(slots, key=_slot_key)
    for rank, (t, r) in enumerate(ordered):
        need = rank * T if rank < k else (k - 1) * T
        if t < need - TIME_TOL:
            return False
        if t + ps.get(r).prop_delay > t_fec_max + TIME_TOL:
            return False
    return True


def _even_slots(t0: float, end: float, n_r: int) -> list[float]:
    if n_r == 1:
        return [t0]
    step = (end - t0) / (n_r - 1)
    return [t0 + i * step for i in range(n_r - 1)] + [end]


def build_spread(rates, fec: FecParams, T: float, ps: PathSet,
                 t_fec_max: float) -> Schedule:
    """Spread schedule: per path, packets fill [t_start, t_fec_max - t_r]
    with even spacing, the start being the smallest feasible value.
    Paths are processed in descending rate order (ties: larger delay,
    then smaller index).  The k globally earliest slots carry the data
    packets in time order, the rest carry redundancy.
    """
    _validate_rates(rates, fec, ps)
    order = sorted((r for r in range(1, ps.count + 1) if rates[r - 1] > 0),
                   key=lambda r: (-rates[r - 1], -ps.get(r).prop_delay, r))
    placed: list[tuple[float, int]] = []
    for r in order:
        n_r = rates[r - 1]
        end = t_fec_max - ps.get(r).prop_delay
        if end < -TIME_TOL:
            raise InfeasibleScheduleError(
                f"t_fec_max={t_fec_max} below the propagation delay of path {r}")
        end = max(end, 0.0)
        if n_r >= 2 and end <= TIME_TOL:
            raise InfeasibleScheduleError(
                f"path {r} has no room to spread {n_r} packets "
                f"under t_fec_max={t_fec_max}")
        hi = end if n_r == 1 else end - TIME_TOL

        def probe(t0: float) -> bool:
            return _slots_feasible(
                placed + [(t, r) for t in _even_slots(t0, end, n_r)],
                fec, T, ps, t_fec_max)

        if not probe(hi):
            raise InfeasibleScheduleError(
                f"no feasible start for path {r} with rate {n_r} "
                f"under t_fec_max={t_fec_max}")
        if probe(0.0):
            t0 = 0.0
        else:
            lo = 0.0
            t0 = hi
            # feasibility is monotone in the start time: bisect
            for _ in range(100):
                if t0 - lo < 1e-12:
                    break
                mid = 0.5 * (lo + t0)
                if probe(mid):
                    t0 = mid
                else:
                    lo = mid
            # the true threshold usually sits on a whole-microsecond
            # constraint boundary; snap to it when feasible
            snapped = round(t0 * 1e6) / 1e6
            if abs(snapped - t0) < 2.0 * TIME_TOL and probe(snapped):
                t0 = snapped
        placed.extend((t, r) for t in _even_slots(t0, end, n_r))

    ordered = sorted(placed, key=_slot_key)
    times = tuple(t for t, _ in ordered)
    paths = tuple(r for _, r in ordered)
    s = Schedule(times, paths, fec, T)
    report = check_feasible(s, ps, t_fec_max)
    if not report:
        raise InfeasibleScheduleError(
            f"constructed schedule failed validation: {report.describe()}")
    # the earliest-slots rule guarantees data precede redundancy per path
    for r in s.rates:
        packets = s.path_packets(r)
        datas = [i <= fec.k for i in packets]
        assert datas == sorted(datas, reverse=True), \
            f"data/redundancy interleaved on path {r}"
    return s


# -- plain-text serialization -------------------------------------------------
#
# header:  n k T_us t_fec_max_us
# packet:  index time_us path_index role(D|R)

def schedule_to_text(s: Schedule, t_fec_max: float) -> str:
    lines = [f"{s.fec.n} {s.fec.k} {s.gen_interval * 1e6:.6f} {t_fec_max * 1e6:.6f}"]
    for i in range(s.fec.n):
        role = "D" if i < s.fec.k else "R"
        lines.append(f"{i + 1} {s.times[i] * 1e6:.6f} {s.paths[i]} {role}")
    return "\n".join(lines) + "\n"


def schedule_from_text(text: str, systematic: bool = True) -> tuple[Schedule, float]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty schedule file")
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"line 1: expected 'n k T_us t_fec_max_us', got {lines[0]!r}")
    n, k = int(head[0]), int(head[1])
    T = float(head[2]) / 1e6
    t_fec_max = float(head[3]) / 1e6
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} packet lines, got {len(lines) - 1}")
    times = [0.0] * n
    paths = [0] * n
    seen = set()
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'index time_us path role'")
        idx = int(parts[0])
        if not 1 <= idx <= n or idx in seen:
            raise ValueError(f"line {lineno}: bad packet index {idx}")
        seen.add(idx)
        times[idx - 1] = float(parts[1]) / 1e6
        paths[idx - 1] = int(parts[2])
        role = parts[3]
        if role not in ("D", "R") or (role == "D") != (idx <= k):
            raise ValueError(f"line {lineno}: role {role!r} inconsistent with index {idx}")
    fec = FecParams(n, k, systematic)
    return Schedule(tuple(times), tuple(paths), fec, T), t_fec_max
