"""Tests for Monte Carlo simulation and trace-driven evaluation."""

import math

import numpy as np
import pytest

from mpfec.errors import TraceFormatError, TraceResolutionError
from mpfec.exact import effective_loss_exact
from mpfec.fec import FecParams
from mpfec.gilbert import BAD, GOOD, PathModel
from mpfec.schedule import PathSet, build_immediate
from mpfec.sim import (Chunk, Trace, chunk_trace, filter_traces,
                       generate_traces, load_trace, max_burst_seconds,
                       mc_effective_loss, oracle_vs_prediction, save_trace,
                       trace_effective_loss)

T = 0.005


def make_trace(symbols, interval=0.005, meta=""):
    return Trace(interval, np.array(symbols, dtype=np.int8), meta=meta)


class TestTrace:
    def test_validation(self):
        with pytest.raises(ValueError):
            Trace(0.0, np.array([0], dtype=np.int8))
        with pytest.raises(ValueError):
            Trace(0.005, np.array([], dtype=np.int8))

    def test_duration(self):
        assert make_trace([0] * 200).duration == pytest.approx(1.0)


class TestTraceIO:
    def test_roundtrip(self, tmp_path):
        t = make_trace([0, 1, 1, 0, 1], meta="unit test")
        f = tmp_path / "t.txt"
        save_trace(t, str(f))
        t2 = load_trace(str(f))
        assert t2.interval == pytest.approx(t.interval)
        assert np.array_equal(t2.symbols, t.symbols)
        assert t2.meta == "unit test"

    def test_invalid_symbol_reports_file_and_line(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("# interval_us=5000\nGGB\nGXG\n")
        with pytest.raises(TraceFormatError) as e:
            load_trace(str(f))
        assert "bad.txt" in str(e.value)
        assert "3" in str(e.value)

    def test_missing_header(self, tmp_path):
        f = tmp_path / "nohdr.txt"
        f.write_text("GGBB\n")
        with pytest.raises(TraceFormatError):
            load_trace(str(f))

    def test_empty_body(self, tmp_path):
        f = tmp_path / "empty.txt"
        f.write_text("# interval_us=5000\n")
        with pytest.raises(TraceFormatError):
            load_trace(str(f))


class TestBurstFilter:
    def test_max_burst(self):
        t = make_trace([0, 1, 1, 1, 0, 1, 1, 0])
        assert max_burst_seconds(t) == pytest.approx(0.015)

    def test_all_good_is_zero(self):
        assert max_burst_seconds(make_trace([0, 0, 0])) == 0.0

    def test_filter(self):
        long_burst = make_trace([0] * 10 + [1] * 25 + [0] * 10)  # 125 ms
        short_burst = make_trace([0] * 10 + [1] * 10 + [0] * 10)  # 50 ms
        clean = make_trace([0] * 30)
        kept = filter_traces([long_burst, short_burst, clean], max_burst=0.1)
        assert kept == [short_burst, clean]


class TestChunking:
    def test_full_chunks_only(self):
        t = make_trace([0] * 2500)  # 12.5 s at 5 ms
        chunks = chunk_trace(t, chunk_seconds=5.0, parent="p")
        assert len(chunks) == 2
        assert all(len(c.symbols) == 1000 for c in chunks)
        assert [c.index for c in chunks] == [0, 1]
        assert chunks[0].parent == "p"

    def test_chunk_shorter_than_sample(self):
        with pytest.raises(ValueError):
            chunk_trace(make_trace([0, 1]), chunk_seconds=1e-6)


class TestGenerateTraces:
    def test_deterministic(self):
        m = PathModel(0.05, 0.010)
        a = generate_traces(m, 0.005, 10.0, 3, seed=9)
        b = generate_traces(m, 0.005, 10.0, 3, seed=9)
        c = generate_traces(m, 0.005, 10.0, 3, seed=10)
        assert all(np.array_equal(x.symbols, y.symbols) for x, y in zip(a, b))
        assert not np.array_equal(a[0].symbols, c[0].symbols)

    def test_loss_frequency(self):
        m = PathModel(0.05, 0.010)
        traces = generate_traces(m, 0.005, 400.0, 2, seed=1)
        sym = np.concatenate([t.symbols for t in traces])
        # samples are correlated; a generous band around the stationary
        # rate still catches sign/scale errors
        assert abs(sym.mean() - 0.05) < 0.01

    def test_validation(self):
        with pytest.raises(ValueError):
            generate_traces(PathModel(0.05, 0.01), 0.005, 0.0, 1, seed=0)


class TestMonteCarlo:
    def test_blocks_validation(self, two_paths):
        s = build_immediate((3, 3), FecParams(6, 4), T, two_paths)
        with pytest.raises(ValueError):
            mc_effective_loss(s, two_paths, 0, seed=0)

    def test_matches_analytic(self, two_paths):
        s = build_immediate((3, 3), FecParams(6, 4), T, two_paths)
        want = effective_loss_exact(s, two_paths)
        mean, se = mc_effective_loss(s, two_paths, 400_000, seed=2)
        assert se > 0
        assert abs(mean - want) < 4 * se

    def test_deterministic_across_workers(self, two_paths):
        s = build_immediate((3, 3), FecParams(6, 4), T, two_paths)
        a = mc_effective_loss(s, two_paths, 150_000, seed=5, workers=1)
        b = mc_effective_loss(s, two_paths, 150_000, seed=5, workers=4)
        assert a == b

    def test_deterministic_across_backends(self, two_paths):
        s = build_immediate((3, 3), FecParams(6, 4), T, two_paths)
        a = mc_effective_loss(s, two_paths, 100_000, seed=5, workers=1,
                              backend="compiled")
        b = mc_effective_loss(s, two_paths, 100_000, seed=5, workers=1,
                              backend="python")
        assert a == b


class TestTraceEffectiveLoss:
    def single_path_schedule(self, fec=FecParams(4, 2)):
        ps = PathSet((PathModel(0.01, 0.010, 0.0),))
        return build_immediate((fec.n,), fec, T, ps), ps

    def test_all_good_is_zero(self):
        s, _ = self.single_path_schedule()
        chunk = Chunk(T, np.zeros(1000, dtype=np.int8))
        assert trace_effective_loss(s, (chunk,)) == 0.0

    def test_all_bad_is_one(self):
        s, _ = self.single_path_schedule()
        chunk = Chunk(T, np.ones(1000, dtype=np.int8))
        assert trace_effective_loss(s, (chunk,)) == 1.0

    def test_hand_counted_example(self):
        # blocks start every k*T = 10 ms = 2 samples; block pattern
        # covers samples b*2 .. b*2+3
        s, _ = self.single_path_schedule()
        sym = np.array([1, 1, 1, 0, 0, 0, 0, 0], dtype=np.int8)
        chunk = Chunk(T, sym)
        # 3 blocks fit: block 0 sees BBBG (3 losses, data lost 2),
        # block 1 sees BGGG (recovered), block 2 sees GGGG
        assert trace_effective_loss(s, (chunk,)) == pytest.approx(2 / 6)

    def test_sub_sample_spacing_collides(self):
        s, _ = self.single_path_schedule()
        chunk = Chunk(0.020, np.zeros(100, dtype=np.int8))  # coarser than T
        with pytest.raises(TraceResolutionError):
            trace_effective_loss(s, (chunk,))

    def test_too_short_chunk(self):
        s, _ = self.single_path_schedule()
        with pytest.raises(ValueError):
            trace_effective_loss(s, (Chunk(T, np.zeros(2, dtype=np.int8)),))

    def test_matches_analytic_on_long_synthetic_trace(self):
        m = PathModel(0.05, 0.010)
        ps = PathSet((m,))
        fec = FecParams(4, 2)
        s = build_immediate((4,), fec, T, ps)
        trace = generate_traces(m, T, 2000.0, 1, seed=3)[0]
        chunk = Chunk(trace.interval, trace.symbols)
        got = trace_effective_loss(s, (chunk,))
        want = effective_loss_exact(s, ps)
        assert abs(got - want) < 0.2 * want + 1e-3

    def test_per_path_offsets(self, two_paths):
        # a 50 ms offset on path 2 shifts which samples it reads
        s = build_immediate((2, 2), FecParams(4, 2), T, two_paths)
        sym1 = np.zeros(1000, dtype=np.int8)
        sym2 = np.zeros(1000, dtype=np.int8)
        sym1[:10] = 1  # both paths bad in the first 50 ms
        sym2[:10] = 1
        chunks = (Chunk(T, sym1), Chunk(T, sym2))
        with_offset = trace_effective_loss(s, chunks, offsets=[0, 10])
        without = trace_effective_loss(s, chunks, offsets=[0, 0])
        assert without > 0.0
        assert with_offset < without


class TestOraclePrediction:
    def test_smoke(self):
        m = PathModel(0.05, 0.010)
        t1, t2 = generate_traces(m, T, 130.0, 2, seed=21)
        res = oracle_vs_prediction([(t1, t2)], FecParams(6, 4), T,
                                   dt=0.050, chunk_seconds=40.0)
        assert res.evaluated + res.excluded == 3
        assert len(res.oracle) == res.evaluated
        assert len(res.prediction) <= max(res.evaluated - 1, 0)
        assert all(g >= 1.0 for g in res.oracle)

    def test_dt_must_be_sample_multiple(self):
        m = PathModel(0.05, 0.010)
        t1, t2 = generate_traces(m, T, 90.0, 2, seed=22)
        with pytest.raises(ValueError):
            oracle_vs_prediction([(t1, t2)], FecParams(6, 4), T,
                                 dt=0.0512, chunk_seconds=40.0)
