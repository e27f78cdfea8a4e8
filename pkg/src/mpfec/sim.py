"""Monte Carlo validation and trace-driven evaluation.

Monte Carlo simulates independent FEC blocks (stationary start per
block, matching the analytic model).  Blocks are partitioned into
fixed-size batches, each fed by its own counter-based random stream, so
the result is bit-reproducible for a given seed regardless of how many
workers consume the batches.

Trace-driven evaluation slides the FEC block pattern over recorded
good/bad loss sequences at the block generation cadence and applies the
recovery rule directly, with no loss model in between.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (InfeasibleScheduleError, TraceFormatError,
                     TraceResolutionError)
from .exact import _chain_arrays
from .fec import FecParams
from .gilbert import BAD, GOOD, PathModel, transition_prob
from .rng import stream_rng
from .schedule import PathSet, Schedule, build_immediate, build_spread, t_fec

MC_BATCH = 1 << 16


@dataclass(frozen=True)
class Trace:
    """A recorded loss sequence: one good/bad symbol per `interval`."""

    interval: float
    symbols: np.ndarray  # int8, 0 good / 1 bad
    meta: str = ""

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError("interval must be > 0")
        if len(self.symbols) == 0:
            raise ValueError("trace must be nonempty")

    @property
    def duration(self) -> float:
        return len(self.symbols) * self.interval


@dataclass(frozen=True)
class Chunk:
    """A fixed-duration slice of a trace."""

    interval: float
    symbols: np.ndarray
    parent: str = ""
    index: int = 0


def chunk_trace(trace: Trace, chunk_seconds: float = 40.0, parent: str = "") -> list[Chunk]:
    """Cut a trace into full chunks of the given duration."""
    per = int(round(chunk_seconds / trace.interval))
    if per < 1:
        raise ValueError("chunk shorter than one sample")
    count = len(trace.symbols) // per
    return [Chunk(trace.interval, trace.symbols[i * per:(i + 1) * per],
                  parent or trace.meta, i)
            for i in range(count)]


# -- synthetic traces and trace files -----------------------------------------

def generate_traces(m: PathModel, interval: float, duration: float,
                    count: int, seed: int) -> list[Trace]:
    """Synthetic loss traces sampled from the two-state model at a
    fixed interval (one continuous chain per trace)."""
    samples = int(round(duration / interval))
    if samples < 1 or count < 1:
        raise ValueError("need a positive duration and count")
    p_gb = transition_prob(m, GOOD, BAD, interval)
    p_bb = transition_prob(m, BAD, BAD, interval)
    u = stream_rng(seed, 0).random((count, samples))
    sym = np.empty((count, samples), dtype=np.int8)
    sym[:, 0] = u[:, 0] < m.pi_bad
    for t in range(1, samples):
        p = np.where(sym[:, t - 1] == BAD, p_bb, p_gb)
        sym[:, t] = u[:, t] < p
    return [Trace(interval, sym[i], meta=f"synthetic seed={seed} index={i}")
            for i in range(count)]


def save_trace(trace: Trace, path: str) -> None:
    per_line = max(1, int(round(1.0 / trace.interval)))
    with open(path, "w") as fh:
        fh.write(f"# interval_us={int(round(trace.interval * 1e6))}\n")
        if trace.meta:
            fh.write(f"# meta={trace.meta}\n")
        chars = np.where(trace.symbols == BAD, "B", "G")
        for i in range(0, len(chars), per_line):
            fh.write("".join(chars[i:i + per_line]) + "\n")


def load_trace(path: str) -> Trace:
    interval = None
    meta = ""
    symbols: list[int] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("interval_us="):
                    try:
                        interval = int(body.split("=", 1)[1]) / 1e6
                    except ValueError:
                        raise TraceFormatError("bad interval_us value", path, lineno)
                elif body.startswith("meta="):
                    meta = body.split("=", 1)[1]
                continue
            if interval is None:
                raise TraceFormatError("missing '# interval_us=' header", path, lineno)
            for ch in line:
                if ch.isspace():
                    continue
                if ch == "G":
                    symbols.append(GOOD)
                elif ch == "B":
                    symbols.append(BAD)
                else:
                    raise TraceFormatError(f"invalid symbol {ch!r}", path, lineno)
    if interval is None:
        raise TraceFormatError("missing '# interval_us=' header", path)
    if not symbols:
        raise TraceFormatError("trace has no symbols", path)
    return Trace(interval, np.array(symbols, dtype=np.int8), meta=meta)


def max_burst_seconds(trace: Trace) -> float:
    """Duration spanned by the longest run of consecutive losses."""
    sym = trace.symbols
    if not sym.any():
        return 0.0
    padded = np.concatenate([[0], sym, [0]])
    edges = np.flatnonzero(np.diff(padded))
    runs = edges[1::2] - edges[::2]
    return float(runs.max() * trace.interval)


def filter_traces(traces, max_burst: float = 0.1) -> list[Trace]:
    """Drop traces containing any loss run spanning >= max_burst
    seconds (such runs indicate measurement artifacts, not losses)."""
    return [t for t in traces if max_burst_seconds(t) < max_burst]


# -- Monte Carlo ---------------------------------------------------------------

def _mc_python(u, pos, offsets, trans, pib, n, k, systematic):
    """Numpy twin of the compiled Monte Carlo counter; bit-identical."""
    blocks = u.shape[0]
    lost = np.empty((blocks, n), dtype=bool)
    for r in range(len(offsets) - 1):
        lo, hi = offsets[r], offsets[r + 1]
        lost[:, lo] = u[:, lo] < pib[r]
        for idx in range(lo + 1, hi):
            p_bad = np.where(lost[:, idx - 1], trans[idx, 3], trans[idx, 1])
            lost[:, idx] = u[:, idx] < p_bad
    f = lost.sum(axis=1)
    d_raw = lost[:, pos < k].sum(axis=1)
    failed = f > n - k
    d = np.where(failed, d_raw if systematic else k, 0).astype(np.int64)
    return int(d.sum()), int((d * d).sum())


def mc_effective_loss(s: Schedule, ps: PathSet, blocks: int, seed: int,
                      workers: int | None = None,
                      backend: str | None = None) -> tuple[float, float]:
    """Monte Carlo estimate of the effective loss rate and its standard
    error, over `blocks` independent FEC blocks."""
    if blocks < 1:
        raise ValueError("blocks must be >= 1")
    n, k = s.fec.n, s.fec.k
    pos, offsets, trans, pib = _chain_arrays(s, ps)
    core = _kernels.resolve(backend)
    count = core.mc_count if core is not None else _mc_python

    batches = [(i, min(MC_BATCH, blocks - i * MC_BATCH))
               for i in range((blocks + MC_BATCH - 1) // MC_BATCH)]

    def run(batch):
        i, size = batch
        u = stream_rng(seed, i).random((size, n))
        return count(u, pos, offsets, trans, pib, n, k, s.fec.systematic)

    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(b) for b in batches]

    sum_d = sum(r[0] for r in results)
    sum_d2 = sum(r[1] for r in results)
    mean = sum_d / blocks / k
    var = max(sum_d2 / blocks / k ** 2 - mean ** 2, 0.0)
    std_error = math.sqrt(var / blocks)
    return mean, std_error


# -- trace-driven evaluation ---------------------------------------------------

def _packet_sample_indices(s: Schedule, r: int, offset: int, interval: float,
                           nblocks: int) -> np.ndarray:
    """(nblocks, n_r) sample indices of path r's packets."""
    step = s.fec.k * s.gen_interval
    times = np.array(s.path_times(r))
    b = np.arange(nblocks)[:, None]
    return np.rint((b * step + times[None, :]) / interval).astype(np.int64) + offset


def trace_effective_loss(s: Schedule, chunks, offsets=None) -> float:
    """Fraction of data packets lost after recovery when the block
    pattern is slid across the given per-path chunks at the generation
    cadence.  `chunks[r-1]` carries path r; `offsets` are per-path
    sample offsets (the propagation-delay realization)."""
    used = sorted(s.rates)
    if offsets is None:
        offsets = [0] * len(chunks)
    intervals = {chunks[r - 1].interval for r in used}
    if len(intervals) != 1:
        raise ValueError("all chunks must share one sampling interval")
    interval = intervals.pop()
    step = s.fec.k * s.gen_interval

    # largest block count all packets of all paths fit into their chunks
    nblocks = None
    for r in used:
        length = len(chunks[r - 1].symbols)
        off = offsets[r - 1]
        for t in s.path_times(r):
            first = int(np.rint(t / interval)) + off
            if first < 0 or first >= length:
                nb = 0
            else:
                nb = int(((length - 1 - off) * interval - t) / step) + 1
                while nb > 0 and (int(np.rint(((nb - 1) * step + t) / interval))
                                  + off >= length):
                    nb -= 1
            nblocks = nb if nblocks is None else min(nblocks, nb)
    if not nblocks or nblocks < 1:
        raise ValueError("chunk too short for a single FEC block")

    f = np.zeros(nblocks, dtype=np.int64)
    d = np.zeros(nblocks, dtype=np.int64)
    for r in used:
        idx = _packet_sample_indices(s, r, offsets[r - 1], interval, nblocks)
        if idx.shape[1] > 1:
            srt = np.sort(idx, axis=1)
            if (np.diff(srt, axis=1) == 0).any():
                raise TraceResolutionError(
                    f"two packets of one block map to the same sample on path {r}; "
                    "the schedule is too dense for this trace resolution")
        lost = chunks[r - 1].symbols[idx] == BAD
        f += lost.sum(axis=1)
        is_data = np.array([i <= s.fec.k for i in s.path_packets(r)])
        d += lost[:, is_data].sum(axis=1)

    failed = f > s.fec.n - s.fec.k
    if s.fec.systematic:
        lost_data = d[failed].sum()
    else:
        lost_data = int(failed.sum()) * s.fec.k
    return float(lost_data / (s.fec.k * nblocks))


@dataclass
class OraclePredictionResult:
    """Per-chunk loss improvement ratios of Spread over Immediate."""

    oracle: list[float] = field(default_factory=list)
    prediction: list[float] = field(default_factory=list)
    evaluated: int = 0
    excluded: int = 0


def _best_on_chunk(builder, fec, T, ps, chunks, offsets):
    best = None
    for rates in _compositions(fec.n, ps.count):
        s = builder(rates)
        if s is None:
            continue
        try:
            loss = trace_effective_loss(s, chunks, offsets)
        except TraceResolutionError:
            # denser than the trace sampling grid; not evaluable here
            continue
        key = (loss, t_fec(s, ps), rates)
        if best is None or key < best[0]:
            best = (key, s)
    return best


def _compositions(n, parts):
    from .optimize import compositions
    return compositions(n, parts)


def oracle_vs_prediction(trace_pairs, fec: FecParams, T: float, dt: float,
                         chunk_seconds: float = 40.0) -> OraclePredictionResult:
    """Oracle picks each chunk's own best Immediate and Spread rates;
    Prediction reuses the previous chunk's rates.  Chunks where optimal
    Immediate is lossless or single-path are excluded (no improvement
    space).  dt must be a whole number of trace samples."""
    result = OraclePredictionResult()
    spread_cache: dict[tuple, Schedule | None] = {}

    for pair_idx, (tr1, tr2) in enumerate(trace_pairs):
        if abs(tr1.interval - tr2.interval) > 1e-12:
            raise ValueError("paired traces must share one sampling interval")
        interval = tr1.interval
        if abs(dt / interval - round(dt / interval)) > 1e-9:
            raise ValueError(
                "dt must be a whole multiple of the trace interval in trace mode")
        # loss parameters are irrelevant here: schedules are judged on
        # the traces; only the delays enter the constructors
        ps = PathSet((PathModel(0.5, 1.0, 0.0), PathModel(0.5, 1.0, dt)))
        offsets = [0, int(round(dt / interval))]

        c1 = chunk_trace(tr1, chunk_seconds, parent=f"pair{pair_idx}/a")
        c2 = chunk_trace(tr2, chunk_seconds, parent=f"pair{pair_idx}/b")
        count = min(len(c1), len(c2))
        if count < 2:
            raise ValueError("need at least two chunks per trace pair")

        def imm_builder(rates):
            return build_immediate(rates, fec, T, ps)

        def spr_builder(rates, budget):
            key = (rates, round(budget * 1e9))
            if key not in spread_cache:
                try:
                    spread_cache[key] = build_spread(rates, fec, T, ps, budget)
                except InfeasibleScheduleError:
                    spread_cache[key] = None
            return spread_cache[key]

        prev = None  # (imm_rates, spr_rates, budget)
        for c in range(count):
            chunks = (c1[c], c2[c])
            imm = _best_on_chunk(imm_builder, fec, T, ps, chunks, offsets)
            (imm_loss, imm_tfec, imm_rates), imm_s = imm
            spr = _best_on_chunk(lambda rates: spr_builder(rates, imm_tfec),
                                 fec, T, ps, chunks, offsets)

            excluded = (imm_loss == 0.0 or max(imm_rates) == fec.n
                        or spr is None)
            if not excluded:
                (spr_loss, _, spr_rates), _ = spr
                result.oracle.append(
                    imm_loss / spr_loss if spr_loss > 0 else math.inf)
                result.evaluated += 1
                if prev is not None:
                    p_imm_rates, p_spr_rates, p_budget = prev
                    p_imm = trace_effective_loss(
                        imm_builder(p_imm_rates), chunks, offsets)
                    p_spr_s = spr_builder(p_spr_rates, p_budget)
                    if p_spr_s is not None:
                        p_spr = trace_effective_loss(p_spr_s, chunks, offsets)
                        if p_imm > 0:
                            result.prediction.append(
                                p_imm / p_spr if p_spr > 0 else math.inf)
            else:
                result.excluded += 1
            if spr is not None:
                prev = (imm_rates, spr[0][2], imm_tfec)
            else:
                prev = None
    return result
