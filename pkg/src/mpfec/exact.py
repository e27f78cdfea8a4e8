"""Exact effective loss rate for an arbitrary schedule, by enumeration
over all 2^n failure configurations of a block.

The cost is O(2^n * n); enumeration is guarded at n <= 24.  Schedules
with even per-path spacing should use mpfec.evenfast instead.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import EnumerationLimitError
from .fec import FailureConfig
from .gilbert import BAD, GOOD, transition_prob
from .schedule import PathSet, Schedule

ENUMERATION_LIMIT = 24


def config_prob(s: Schedule, ps: PathSet, c: FailureConfig) -> float:
    """Probability of one failure configuration: independent paths,
    per path a stationary start times a chain of transition
    probabilities over the per-path departure gaps."""
    if len(c.states) != s.fec.n:
        raise ValueError(f"config length {len(c.states)} != n={s.fec.n}")
    prob = 1.0
    for r in sorted(s.rates):
        m = ps.get(r)
        idxs = [i for i in range(s.fec.n) if s.paths[i] == r]
        first = c.states[idxs[0]]
        prob *= m.pi_bad if first == BAD else m.pi_good
        for a, b in zip(idxs, idxs[1:]):
            gap = s.times[b] - s.times[a]
            prob *= transition_prob(m, c.states[a], c.states[b], gap)
    return prob


def _chain_arrays(s: Schedule, ps: PathSet):
    """Flatten the per-path transition chains for the kernels.

    Returns (pos, offsets, trans, pib): pos holds the 0-based global
    packet positions concatenated per used path in per-path time order;
    trans row i holds (pGG, pGB, pBG, pBB) for the gap ending at pos[i]
    (rows at path starts are unused); pib the per-path loss rates.
    """
    n = s.fec.n
    pos: list[int] = []
    offsets = [0]
    trans = np.zeros((n, 4))
    pib = []
    for r in sorted(s.rates):
        m = ps.get(r)
        idxs = [i for i in range(n) if s.paths[i] == r]
        for j, i in enumerate(idxs):
            if j > 0:
                gap = s.times[i] - s.times[idxs[j - 1]]
                p_gb = transition_prob(m, GOOD, BAD, gap)
                p_bb = transition_prob(m, BAD, BAD, gap)
                trans[len(pos)] = (1.0 - p_gb, p_gb, 1.0 - p_bb, p_bb)
            pos.append(i)
        offsets.append(len(pos))
        pib.append(m.pi_bad)
    return (np.array(pos, dtype=np.int64), np.array(offsets, dtype=np.int64),
            trans, np.array(pib))


def _exact_python(pos, offsets, trans, pib, n, k, systematic):
    """Numpy twin of the compiled enumeration kernel."""
    total_prob = np.array([1.0])
    total_f = np.array([0], dtype=np.int16)
    total_d = np.array([0], dtype=np.int16)
    for r in range(len(offsets) - 1):
        lo, hi = offsets[r], offsets[r + 1]
        # grow the per-path config arrays one packet at a time; the
        # config bit order matches the per-path packet order
        pg = np.array([1.0 - pib[r], 0.0])
        pb = np.array([0.0, pib[r]])
        f = np.array([0, 1], dtype=np.int16)
        d0 = 1 if pos[lo] < k else 0
        d = np.array([0, d0], dtype=np.int16)
        for idx in range(lo + 1, hi):
            p_gg, p_gb, p_bg, p_bb = trans[idx]
            good = pg * p_gg + pb * p_bg
            bad = pg * p_gb + pb * p_bb
            pg = np.concatenate([good, np.zeros_like(good)])
            pb = np.concatenate([np.zeros_like(bad), bad])
            is_data = 1 if pos[idx] < k else 0
            f = np.concatenate([f, f + 1])
            d = np.concatenate([d, d + is_data])
        prob = pg + pb
        total_prob = np.multiply.outer(total_prob, prob).ravel()
        total_f = np.add.outer(total_f, f).ravel()
        total_d = np.add.outer(total_d, d).ravel()
    mask = total_f > n - k
    if systematic:
        return float((total_prob[mask] * total_d[mask]).sum() / k)
    return float(total_prob[mask].sum())


def effective_loss_exact(s: Schedule, ps: PathSet, backend: str | None = None) -> float:
    """Effective loss rate of the schedule, by full enumeration."""
    n, k = s.fec.n, s.fec.k
    if n > ENUMERATION_LIMIT:
        raise EnumerationLimitError(
            f"n={n} exceeds the enumeration guard ({ENUMERATION_LIMIT}); "
            "use the even-spacing evaluator (mpfec.evenfast)")
    pos, offsets, trans, pib = _chain_arrays(s, ps)
    core = _kernels.resolve(backend)
    if core is None:
        return _exact_python(pos, offsets, trans, pib, n, k, s.fec.systematic)
    return core.exact_loss(pos, offsets, trans, pib, n, k, s.fec.systematic)
