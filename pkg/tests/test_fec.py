"""Tests for the block recovery rule."""

import pytest

from mpfec.fec import (FailureConfig, FecParams, lost_data_after_recovery,
                       lost_fec_count)


class TestFecParams:
    def test_redundancy(self):
        assert FecParams(10, 8).redundancy == 2

    @pytest.mark.parametrize("n,k", [(4, 0), (4, 5), (0, 0)])
    def test_invalid(self, n, k):
        with pytest.raises(ValueError):
            FecParams(n, k)

    def test_k_equals_n_allowed(self):
        assert FecParams(3, 3).redundancy == 0


class TestFailureConfig:
    def test_from_string(self):
        c = FailureConfig.from_string("GBBG")
        assert lost_fec_count(c) == 2

    def test_from_string_invalid(self):
        with pytest.raises(ValueError):
            FailureConfig.from_string("GXB")


class TestRecovery:
    def test_recovered_when_losses_within_redundancy(self):
        p = FecParams(6, 4)
        c = FailureConfig.from_string("BGGBGG")
        assert lost_data_after_recovery(p, c) == 0

    def test_unrecoverable_counts_lost_data(self):
        p = FecParams(6, 4)
        c = FailureConfig.from_string("BBGGBG")
        assert lost_data_after_recovery(p, c) == 2

    def test_unrecoverable_but_data_intact(self):
        # all losses hit redundancy packets: nothing to deliver is lost
        p = FecParams(6, 2)
        c = FailureConfig.from_string("GGBBBB")
        assert lost_data_after_recovery(p, c) == 0

    def test_nonsystematic_loses_everything(self):
        p = FecParams(6, 4, systematic=False)
        c = FailureConfig.from_string("BGGGBB")
        assert lost_data_after_recovery(p, c) == 4

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            lost_data_after_recovery(FecParams(4, 2), FailureConfig.from_string("GG"))

    def test_exhaustive_boundary(self):
        # exactly n - k losses recover, n - k + 1 do not
        p = FecParams(5, 3)
        assert lost_data_after_recovery(p, FailureConfig.from_string("BBGGG")) == 0
        assert lost_data_after_recovery(p, FailureConfig.from_string("BBBGG")) == 3
