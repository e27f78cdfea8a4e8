"""FEC(n, k) block loss accounting.

Only the recovery rule matters here: a block of n packets carrying k
data packets is fully recovered iff at most n - k packets are lost.
Packet indices 1..k are the data packets in generation order, k+1..n
the redundancy packets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gilbert import BAD, GOOD


@dataclass(frozen=True)
class FecParams:
    """Block size n, data count k and the systematic flag."""

    n: int
    k: int
    systematic: bool = True

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got n={self.n}, k={self.k}")

    @property
    def redundancy(self) -> int:
        return self.n - self.k


@dataclass(frozen=True)
class FailureConfig:
    """One loss outcome of a block: per-packet good/bad states, indexed
    like the packets (positions 1..k are the data packets)."""

    states: tuple[int, ...]

    @classmethod
    def from_string(cls, text: str) -> "FailureConfig":
        mapping = {"G": GOOD, "B": BAD}
        try:
            return cls(tuple(mapping[ch] for ch in text))
        except KeyError as exc:
            raise ValueError(f"invalid state character {exc.args[0]!r}") from None

    def __post_init__(self):
        if any(s not in (GOOD, BAD) for s in self.states):
            raise ValueError("states must be GOOD/BAD")


def lost_fec_count(c: FailureConfig) -> int:
    """Number of lost packets in the block, before recovery."""
    return sum(c.states)


def lost_data_after_recovery(p: FecParams, c: FailureConfig) -> int:
    """Number of data packets still lost after the recovery attempt."""
    if len(c.states) != p.n:
        raise ValueError(f"config length {len(c.states)} != n={p.n}")
    lost = lost_fec_count(c)
    if lost <= p.n - p.k:
        return 0
    if p.systematic:
        return sum(c.states[: p.k])
    return p.k
