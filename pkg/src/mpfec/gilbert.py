"""Continuous-time two-state (good/bad) burst loss model.

A path alternates between a good state (packets get through) and a bad
state (packets are lost).  The model is parameterized by the two
quantities that are actually observable on a path: the average loss
rate (stationary probability of the bad state) and the average loss
burst length in seconds (mean sojourn in the bad state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import stream_rng

GOOD = 0
BAD = 1


@dataclass(frozen=True)
class PathModel:
    """Loss statistics and propagation delay of one path.

    loss_rate   stationary probability of the bad state, in (0, 1)
    mean_burst  mean loss burst length in seconds, > 0
    prop_delay  one-way propagation delay in seconds, >= 0
    capacity    optional cap on the number of packets per FEC block
    """

    loss_rate: float
    mean_burst: float
    prop_delay: float = 0.0
    capacity: int | None = None

    def __post_init__(self):
        if not 0.0 < self.loss_rate < 1.0:
            raise ValueError(f"loss_rate must be in (0, 1), got {self.loss_rate}")
        if not self.mean_burst > 0.0:
            raise ValueError(f"mean_burst must be > 0, got {self.mean_burst}")
        if self.prop_delay < 0.0:
            raise ValueError(f"prop_delay must be >= 0, got {self.prop_delay}")
        if self.capacity is not None and (self.capacity < 0 or self.capacity != int(self.capacity)):
            raise ValueError(f"capacity must be a non-negative integer, got {self.capacity}")

    @property
    def pi_bad(self) -> float:
        return self.loss_rate

    @property
    def pi_good(self) -> float:
        return 1.0 - self.loss_rate


def derived_rates(m: PathModel) -> tuple[float, float]:
    """Return (mu_good, mu_bad): the good->bad and bad->good transition
    rates per second implied by the stationary loss rate and the mean
    burst length."""
    mu_bad = 1.0 / m.mean_burst
    mu_good = mu_bad * m.loss_rate / (1.0 - m.loss_rate)
    return mu_good, mu_bad


def transition_prob(m: PathModel, frm: int, to: int, tau: float) -> float:
    """Probability that the path is in state `to` a lag `tau` after
    being observed in state `frm`."""
    if tau < 0.0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    mu_good, mu_bad = derived_rates(m)
    alpha = math.exp(-(mu_good + mu_bad) * tau)
    pi_g, pi_b = m.pi_good, m.pi_bad
    if frm == GOOD:
        p_bad = pi_b - pi_b * alpha
    elif frm == BAD:
        p_bad = pi_b + pi_g * alpha
    else:
        raise ValueError(f"invalid state {frm!r}")
    if to == BAD:
        return p_bad
    if to == GOOD:
        return 1.0 - p_bad
    raise ValueError(f"invalid state {to!r}")


def transition_matrix(m: PathModel, tau: float) -> np.ndarray:
    """2x2 matrix P with P[i, j] = transition_prob(m, i, j, tau),
    indexed by (GOOD, BAD)."""
    p_gb = transition_prob(m, GOOD, BAD, tau)
    p_bb = transition_prob(m, BAD, BAD, tau)
    return np.array([[1.0 - p_gb, p_gb], [1.0 - p_bb, p_bb]])


def sample_states(m: PathModel, times, seed: int) -> np.ndarray:
    """Sample the path state at the given strictly ascending times.

    The first state is drawn from the stationary distribution, each
    following one from the transition law at the inter-sample gap.
    Deterministic for a fixed seed.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise ValueError("times must be a 1-d sequence")
    if times.size == 0:
        return np.empty(0, dtype=np.int8)
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly ascending")

    u = stream_rng(seed, 0).random(times.size)
    states = np.empty(times.size, dtype=np.int8)
    states[0] = BAD if u[0] < m.pi_bad else GOOD
    if times.size > 1:
        gaps = np.diff(times)
        # precompute P(bad | prev) per distinct gap; gaps often repeat
        uniq, inv = np.unique(gaps, return_inverse=True)
        p_gb = np.array([transition_prob(m, GOOD, BAD, g) for g in uniq])
        p_bb = np.array([transition_prob(m, BAD, BAD, g) for g in uniq])
        prev = states[0]
        for i in range(1, times.size):
            j = inv[i - 1]
            p_bad = p_bb[j] if prev == BAD else p_gb[j]
            prev = BAD if u[i] < p_bad else GOOD
            states[i] = prev
    return states
