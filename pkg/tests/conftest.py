"""Shared test fixtures and independent oracle implementations.

The oracles here deliberately avoid the library's own algorithms: loss
distributions are computed by direct state-space dynamic programming or
explicit enumeration, so that agreement with the library is a real
cross-check and not a tautology.
"""

from collections import defaultdict
from itertools import product

import numpy as np
import pytest

from mpfec.fec import FecParams
from mpfec.gilbert import BAD, GOOD, PathModel, transition_prob
from mpfec.schedule import PathSet, Schedule


@pytest.fixture
def two_paths():
    """Two identical 1%-loss paths, 10 ms bursts, 50 ms apart."""
    return PathSet((PathModel(0.01, 0.010, 0.0),
                    PathModel(0.01, 0.010, 0.050)))


@pytest.fixture
def one_path():
    return PathSet((PathModel(0.01, 0.010, 0.0),))


def dp_run_loss_prob(p: float, q: float, a: int, b: int, precond: int) -> float:
    """P(b losses among a consecutive packets | preceding state), by
    direct dynamic programming over (loss count, current state)."""
    step = {(GOOD, GOOD): 1.0 - p, (GOOD, BAD): p,
            (BAD, GOOD): q, (BAD, BAD): 1.0 - q}
    cur = {(0, precond): 1.0}
    for _ in range(a):
        nxt = defaultdict(float)
        for (lost, s), pr in cur.items():
            for s2 in (GOOD, BAD):
                nxt[lost + (s2 == BAD), s2] += pr * step[s, s2]
        cur = nxt
    return sum(pr for (lost, _), pr in cur.items() if lost == b)


def enumerate_effective_loss(s: Schedule, ps: PathSet) -> float:
    """Effective loss rate by explicit enumeration over all joint state
    assignments, with per-path chain probabilities computed packet by
    packet.  Slow; for n <= 10."""
    n, k = s.fec.n, s.fec.k
    by_path: dict[int, list[int]] = defaultdict(list)
    for i, r in enumerate(s.paths):
        by_path[r].append(i)
    total = 0.0
    for states in product((GOOD, BAD), repeat=n):
        lost = sum(states)
        if lost <= n - k:
            continue
        if s.fec.systematic:
            data_lost = sum(states[:k])
        else:
            data_lost = k
        prob = 1.0
        for r, idxs in by_path.items():
            m = ps.get(r)
            first = states[idxs[0]]
            prob *= m.pi_bad if first == BAD else m.pi_good
            for a, b in zip(idxs, idxs[1:]):
                prob *= transition_prob(m, states[a], states[b],
                                        s.times[b] - s.times[a])
        total += data_lost * prob
    return total / k


def random_even_schedule(rng: np.random.Generator,
                         max_n: int = 14, max_paths: int = 3):
    """A random per-path evenly spaced schedule plus its path set."""
    num_paths = int(rng.integers(1, max_paths + 1))
    n = int(rng.integers(num_paths, max_n + 1))
    k = int(rng.integers(1, n + 1))
    models = tuple(
        PathModel(float(rng.uniform(0.001, 0.3)),
                  float(rng.uniform(0.001, 0.05)),
                  float(rng.uniform(0.0, 0.1)))
        for _ in range(num_paths))
    ps = PathSet(models)
    # random composition with every path used
    cuts = sorted(rng.choice(np.arange(1, n), size=num_paths - 1,
                             replace=False)) if num_paths > 1 else []
    bounds = [0, *cuts, n]
    rates = [bounds[i + 1] - bounds[i] for i in range(num_paths)]
    # per path: even spacing, data slots first
    slots = []
    for r, n_r in enumerate(rates, start=1):
        start = float(rng.uniform(0.0, 0.05))
        spacing = float(rng.uniform(0.001, 0.02))
        slots.append([(start + i * spacing, r) for i in range(n_r)])
    # assign data packets to the per-path prefixes, in slot time order
    prefix_order = sorted(
        (slot for path_slots in slots for slot in path_slots),
        key=lambda ts: (ts[0], ts[1]))
    taken = {r: 0 for r in range(1, num_paths + 1)}
    data_slots = []
    for t, r in prefix_order:
        if len(data_slots) == k:
            break
        idx = taken[r]
        data_slots.append(slots[r - 1][idx])
        taken[r] = idx + 1
    data_set = set(id(x) for x in data_slots)
    ordered = data_slots + [slot for path_slots in slots
                            for slot in path_slots
                            if id(slot) not in data_set]
    times = tuple(t for t, _ in ordered)
    paths = tuple(r for _, r in ordered)
    return Schedule(times, paths, FecParams(n, k, True), 0.005), ps
