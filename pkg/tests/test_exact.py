"""Tests for the brute-force effective loss evaluator."""

import numpy as np
import pytest

from conftest import enumerate_effective_loss
from mpfec.errors import EnumerationLimitError
from mpfec.exact import config_prob, effective_loss_exact
from mpfec.fec import FailureConfig, FecParams
from mpfec.gilbert import PathModel
from mpfec.schedule import PathSet, Schedule, build_immediate

T = 0.005


class TestConfigProb:
    def test_all_configs_sum_to_one(self, two_paths):
        from itertools import product
        s = build_immediate((3, 3), FecParams(6, 4), T, two_paths)
        total = sum(config_prob(s, two_paths, FailureConfig(states))
                    for states in product((0, 1), repeat=6))
        assert total == pytest.approx(1.0)

    def test_single_packet_is_stationary(self, one_path):
        s = Schedule((0.0,), (1,), FecParams(1, 1), T)
        assert config_prob(s, one_path, FailureConfig((1,))) == pytest.approx(0.01)
        assert config_prob(s, one_path, FailureConfig((0,))) == pytest.approx(0.99)

    def test_length_check(self, one_path):
        s = Schedule((0.0,), (1,), FecParams(1, 1), T)
        with pytest.raises(ValueError):
            config_prob(s, one_path, FailureConfig((1, 0)))


class TestEffectiveLossExact:
    def test_no_redundancy_single_path_equals_loss_rate(self, one_path):
        s = build_immediate((4,), FecParams(4, 4), T, one_path)
        assert effective_loss_exact(s, one_path) == pytest.approx(0.01)

    def test_matches_independent_enumeration(self, two_paths):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            k = int(rng.integers(1, n + 1))
            times = tuple(np.sort(rng.uniform(0, 0.1, n)))
            paths = tuple(int(p) for p in rng.integers(1, 3, n))
            try:
                s = Schedule(times, paths, FecParams(n, k), T)
            except ValueError:
                continue
            got = effective_loss_exact(s, two_paths)
            want = enumerate_effective_loss(s, two_paths)
            assert got == pytest.approx(want, rel=1e-12)

    def test_nonsystematic(self, two_paths):
        s = build_immediate((3, 3), FecParams(6, 4, systematic=False),
                            T, two_paths)
        got = effective_loss_exact(s, two_paths)
        want = enumerate_effective_loss(s, two_paths)
        assert got == pytest.approx(want, rel=1e-12)
        sys = effective_loss_exact(
            build_immediate((3, 3), FecParams(6, 4), T, two_paths), two_paths)
        assert got > sys  # losing whole blocks is worse

    def test_enumeration_guard(self, one_path):
        fec = FecParams(25, 20)
        s = build_immediate((25,), fec, T, one_path)
        with pytest.raises(EnumerationLimitError):
            effective_loss_exact(s, one_path)

    def test_backends_agree(self, two_paths):
        s = build_immediate((4, 2), FecParams(6, 4), T, two_paths)
        a = effective_loss_exact(s, two_paths, backend="compiled")
        b = effective_loss_exact(s, two_paths, backend="python")
        assert a == pytest.approx(b, rel=1e-13)

    def test_loss_decreases_with_redundancy(self, two_paths):
        losses = [effective_loss_exact(
            build_immediate((3, 3), FecParams(6, k), T, two_paths), two_paths)
            for k in (6, 5, 4, 3)]
        assert losses == sorted(losses, reverse=True)
