"""Fast exact effective loss rate for schedules with even per-path
packet spacing.

The per-path loss count distribution is built from the probability that
b out of a consecutive evenly spaced packets are lost given the state of
the preceding packet.  That probability has no closed form but obeys a
classical recursion over the positions of the state changes; path
distributions are then convolved across the independent paths.

Note on the recursion indices: with R(m, n) = P(exactly m-1 losses among
packets 1..n-1 | packet 0 bad) and S(m, n) = P(exactly m-1 GOOD packets
among packets 1..n-1 | packet 0 good), the block probabilities are
P([a b]|B) = R(b+1, a+1) and P([a b]|G) = S(a-b+1, a+1); both are
cross-checked against a direct forward recursion in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .gilbert import BAD, GOOD, PathModel, transition_prob
from .schedule import TIME_TOL, PathSet, Schedule


@dataclass(frozen=True)
class BlockLossEvent:
    """b losses among a consecutive packets with spacing `spacing`,
    preceded by a packet observed in state `precond`."""

    a: int
    b: int
    precond: int
    spacing: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.b > self.a:
            raise ValueError(f"need 0 <= b <= a, got a={self.a}, b={self.b}")
        if self.precond not in (GOOD, BAD):
            raise ValueError(f"invalid precond state {self.precond!r}")


@lru_cache(maxsize=4096)
def _run_tables(p: float, q: float, a: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Return (PB, PG): PB[b] = P([a b] | bad), PG[b] = P([a b] | good),
    for one-step transition probabilities p = P(G->B), q = P(B->G)."""
    if a == 0:
        return (1.0,), (1.0,)

    def table(first_change: float, stay: float, back: float) -> list[list[float]]:
        # M[m][n] = P(exactly m-1 "events" among packets 1..n-1), where an
        # event is a loss when starting bad (first_change=q, stay=1-p,
        # back=p) and a good packet when starting good (roles swapped).
        # inter[i]: probability that the next event is at offset i
        # tail[i]:  probability that no event occurs in the next i-1 packets
        size = a + 2
        inter = [0.0] * size
        tail = [0.0] * size
        for i in range(1, size):
            if i == 1:
                inter[i] = 1.0 - first_change
                tail[i] = 1.0
            else:
                inter[i] = first_change * stay ** (i - 2) * back
                tail[i] = first_change * stay ** (i - 2)
        M = [[0.0] * size for _ in range(size)]
        for nn in range(1, size):
            M[1][nn] = tail[nn]
        for m in range(2, size):
            for nn in range(m, size):
                M[m][nn] = sum(inter[i] * M[m - 1][nn - i]
                               for i in range(1, nn - m + 2))
        return M

    R = table(q, 1.0 - p, p)   # start bad; events are losses
    S = table(p, 1.0 - q, q)   # start good; events are good packets
    PB = tuple(R[b + 1][a + 1] for b in range(a + 1))
    PG = tuple(S[a - b + 1][a + 1] for b in range(a + 1))
    return PB, PG


def _step_probs(m: PathModel, spacing: float) -> tuple[float, float]:
    p = transition_prob(m, GOOD, BAD, spacing)
    q = transition_prob(m, BAD, GOOD, spacing)
    return p, q


def block_loss_prob(ev: BlockLossEvent, m: PathModel) -> float:
    """P(b out of a consecutive packets lost | preceding state)."""
    if ev.a == 0:
        return 1.0
    p, q = _step_probs(m, ev.spacing)
    PB, PG = _run_tables(p, q, ev.a)
    return PB[ev.b] if ev.precond == BAD else PG[ev.b]


def path_loss_dist(m: PathModel, n_r: int, T_r: float | None) -> np.ndarray:
    """Distribution of the number of lost packets among n_r evenly
    spaced packets, the first drawn from the stationary law."""
    if n_r < 1:
        raise ValueError("n_r must be >= 1")
    if n_r == 1:
        return np.array([m.pi_good, m.pi_bad])
    if T_r is None or T_r <= 0:
        raise ValueError("T_r must be > 0 for n_r >= 2")
    p, q = _step_probs(m, T_r)
    PB, PG = _run_tables(p, q, n_r - 1)
    dist = np.zeros(n_r + 1)
    for j in range(n_r + 1):
        if j <= n_r - 1:
            dist[j] += m.pi_good * PG[j]
        if j >= 1:
            dist[j] += m.pi_bad * PB[j - 1]
    return dist


def _data_forward(m: PathModel, k_r: int, T_r: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Forward recursion over the k_r data packets: returns (AG, AB)
    with AG[l] = P(l losses among the data packets, last one good)."""
    AG = np.zeros(k_r + 1)
    AB = np.zeros(k_r + 1)
    AG[0] = m.pi_good
    AB[1] = m.pi_bad
    if k_r >= 2:
        if T_r is None or T_r <= 0:
            raise ValueError("T_r must be > 0 when several packets share a path")
        p, q = _step_probs(m, T_r)
        for _ in range(k_r - 1):
            nG = AG * (1.0 - p) + AB * q
            nB = np.zeros_like(AB)
            nB[1:] = AG[:-1] * p + AB[:-1] * (1.0 - q)
            AG, AB = nG, nB
    return AG, AB


def joint_data_loss(m: PathModel, n_r: int, k_r: int, T_r: float | None) -> np.ndarray:
    """Joint distribution P(D_r = i, F_r = j) of data and total losses
    on one path; shape (k_r + 1, n_r + 1).  Data packets occupy the
    first k_r of the n_r evenly spaced slots."""
    if not 0 <= k_r <= n_r:
        raise ValueError(f"need 0 <= k_r <= n_r, got k_r={k_r}, n_r={n_r}")
    joint = np.zeros((k_r + 1, n_r + 1))
    if k_r == 0:
        joint[0, :] = path_loss_dist(m, n_r, T_r)
        return joint
    AG, AB = _data_forward(m, k_r, T_r)
    tail = n_r - k_r
    if tail == 0:
        for i in range(k_r + 1):
            joint[i, i] = AG[i] + AB[i]
        return joint
    if T_r is None or T_r <= 0:
        raise ValueError("T_r must be > 0 for n_r >= 2")
    p, q = _step_probs(m, T_r)
    TB, TG = _run_tables(p, q, tail)
    for i in range(k_r + 1):
        for j2 in range(tail + 1):
            joint[i, i + j2] = AG[i] * TG[j2] + AB[i] * TB[j2]
    return joint


def cond_expected_data_loss(joint: np.ndarray, j: int) -> float:
    """E[data losses | total losses = j] from a joint_data_loss table."""
    pf = joint[:, j].sum()
    if pf <= 0.0:
        raise ValueError(f"conditioning on zero-probability event F={j}")
    i = np.arange(joint.shape[0])
    return float((i * joint[:, j]).sum() / pf)


def approx_expected_data_loss(method: str, n_r: int, k_r: int, j: int) -> float:
    """Literature approximations of E[data losses | total losses = j]."""
    if not 0 <= j <= n_r:
        raise ValueError(f"need 0 <= j <= n_r, got j={j}")
    if method == "proportional":
        return k_r / n_r * j
    if method == "golubchik":
        # uniformly random j-subset of the n_r slots: the count among the
        # first k_r slots is hypergeometric with mean j * k_r / n_r
        return j * k_r / n_r
    raise ValueError(f"unknown method {method!r}")


# -- whole-schedule evaluation ------------------------------------------------

def _per_path_params(s: Schedule, ps: PathSet):
    """Extract (model, n_r, k_r, T_r) per used path; raises if the
    schedule is not evenly spaced per path or interleaves data and
    redundancy on a path."""
    k = s.fec.k
    times_by: dict[int, list[float]] = {}
    data_by: dict[int, int] = {}
    seen_red: dict[int, bool] = {}
    for i, r in enumerate(s.paths):
        ts = times_by.get(r)
        if ts is None:
            times_by[r] = ts = []
            data_by[r] = 0
            seen_red[r] = False
        ts.append(s.times[i])
        if i < k:
            if seen_red[r]:
                raise ValueError(f"data and redundancy interleaved on "
                                 f"path {r}; use the exact evaluator")
            data_by[r] += 1
        else:
            seen_red[r] = True
    out = []
    for r in sorted(times_by):
        times = times_by[r]
        n_r = len(times)
        T_r = None
        if n_r >= 2:
            T_r = (times[-1] - times[0]) / (n_r - 1)
            t0 = times[0]
            for i in range(1, n_r - 1):
                if abs(times[i] - (t0 + i * T_r)) > TIME_TOL:
                    raise ValueError(
                        f"path {r} is not evenly spaced; use the exact evaluator")
        out.append((ps.get(r), n_r, data_by[r], T_r))
    return out


def admissible(s: Schedule) -> bool:
    """True if the schedule qualifies for the even-spacing evaluator."""
    for r in sorted(s.rates):
        times = s.path_times(r)
        if len(times) >= 2:
            step = (times[-1] - times[0]) / (len(times) - 1)
            if any(abs(t - (times[0] + i * step)) > TIME_TOL
                   for i, t in enumerate(times)):
                return False
        packets = s.path_packets(r)
        flags = [i <= s.fec.k for i in packets]
        if flags != sorted(flags, reverse=True):
            return False
    return True


def _path_weight_arrays(m: PathModel, n_r: int, k_r: int, T_r: float | None):
    """Per-path (A, B): A[j] = P(F_r = j) and
    B[j] = sum_i i * P(D_r = i, F_r = j)."""
    A = path_loss_dist(m, n_r, T_r)
    joint = joint_data_loss(m, n_r, k_r, T_r)
    i = np.arange(k_r + 1)
    B = (i[:, None] * joint).sum(axis=0)
    return A, B


def _even_loss_python(params, n: int, k: int, systematic: bool) -> float:
    P = np.array([1.0])
    W = np.array([0.0])
    for m, n_r, k_r, T_r in params:
        A, B = _path_weight_arrays(m, n_r, k_r, T_r)
        P_new = np.convolve(P, A)
        W = np.convolve(W, A) + np.convolve(P, B)
        P = P_new
    if systematic:
        return float(W[n - k + 1:].sum() / k)
    return float(P[n - k + 1:].sum())


def _even_loss_from_params(params, n: int, k: int, systematic: bool,
                           backend) -> float:
    """Evaluate the even-spacing formula from raw per-path
    (model, n_r, k_r, T_r) parameters."""
    core = _kernels.resolve(backend)
    if core is None:
        return _even_loss_python(params, n, k, systematic)
    rows = []
    for m, n_r, k_r, T_r in params:
        p, q = _step_probs(m, T_r) if n_r >= 2 else (0.0, 0.0)
        rows.append((n_r, k_r, m.pi_bad, p, q))
    return core.even_loss(np.array(rows), n, k, systematic)


def _even_loss(s: Schedule, ps: PathSet, systematic: bool, backend) -> float:
    core = _kernels.resolve(backend)
    if core is None:
        return _even_loss_python(_per_path_params(s, ps),
                                 s.fec.n, s.fec.k, systematic)
    # single-pass extraction; kept lean because this is the hot path of
    # the rate optimizers
    k = s.fec.k
    times_by: dict[int, list[float]] = {}
    data_by: dict[int, int] = {}
    seen_red: dict[int, bool] = {}
    for i, r in enumerate(s.paths):
        ts = times_by.get(r)
        if ts is None:
            times_by[r] = ts = [s.times[i]]
            data_by[r] = 0
            seen_red[r] = False
        else:
            ts.append(s.times[i])
        if i < k:
            if seen_red[r]:
                raise ValueError(f"data and redundancy interleaved on "
                                 f"path {r}; use the exact evaluator")
            data_by[r] += 1
        else:
            seen_red[r] = True
    rows = []
    for r in sorted(times_by):
        times = times_by[r]
        n_r = len(times)
        m = ps.get(r)
        if n_r >= 2:
            T_r = (times[-1] - times[0]) / (n_r - 1)
            t0 = times[0]
            for i in range(1, n_r - 1):
                if abs(times[i] - (t0 + i * T_r)) > TIME_TOL:
                    raise ValueError(f"path {r} is not evenly spaced; "
                                     "use the exact evaluator")
            pi_b = m.pi_bad
            # p_GB and p_BG share the same relaxation factor
            decay = 1.0 - math.exp(-T_r / (m.mean_burst * (1.0 - pi_b)))
            p, q = pi_b * decay, (1.0 - pi_b) * decay
        else:
            p = q = 0.0
        rows.append((n_r, data_by[r], m.pi_bad, p, q))
    return core.even_loss(np.array(rows), s.fec.n, s.fec.k, systematic)


def _dominant_gap(times: list[float]) -> float:
    """The most frequent inter-packet gap (smallest on a tie)."""
    gaps = [round(b - a, 12) for a, b in zip(times, times[1:])]
    counts: dict[float, int] = {}
    for g in gaps:
        counts[g] = counts.get(g, 0) + 1
    return min(counts, key=lambda g: (-counts[g], g))


def even_loss_rates(s: Schedule, ps: PathSet, backend: str | None = None) -> float:
    """Even-spacing evaluation of a schedule by its per-path counts.

    Each used path is treated as n_r packets at constant spacing equal
    to its dominant inter-packet gap, with k_r data packets.  Exact
    when the schedule is per-path evenly spaced, the constant-spacing
    approximation otherwise (e.g. Immediate with uneven rates)."""
    params = []
    for r in sorted(s.rates):
        times = s.path_times(r)
        n_r = len(times)
        T_r = _dominant_gap(times) if n_r >= 2 else None
        params.append((ps.get(r), n_r, s.data_rates[r], T_r))
    return _even_loss_from_params(params, s.fec.n, s.fec.k,
                                  s.fec.systematic, backend)


def effective_loss_even(s: Schedule, ps: PathSet, backend: str | None = None) -> float:
    """Exact effective loss rate of a systematic FEC block under a
    per-path evenly spaced schedule."""
    return _even_loss(s, ps, True, backend)


def effective_loss_even_nonsystematic(s: Schedule, ps: PathSet,
                                      backend: str | None = None) -> float:
    """Same as effective_loss_even for a non-systematic code (any
    unrecoverable block loses all k data packets)."""
    return _even_loss(s, ps, False, backend)
