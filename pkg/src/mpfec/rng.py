"""Seedable counter-based random streams.

All randomness in the package goes through Philox, a counter-based
generator.  A (seed, stream) pair names one independent stream; streams
can be consumed in any order and split across workers without changing
the drawn values.  Monte Carlo runs partition their blocks into
fixed-size batches and use the batch index as the stream number, which
makes the result independent of how batches are assigned to workers.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the generator for independent stream `stream` of `seed`."""
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
