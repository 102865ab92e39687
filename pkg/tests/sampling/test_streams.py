"""
Tests for seeded sample index streams.
"""
import numpy as np
import pytest
from scipy import stats

from apps.sampling.streams import BLOCK_SIZE, SampleStream


class TestSampleStream:
    """Tests for SampleStream."""

    def test_single_sample(self):
        """Test m = 1 always yields index 1."""
        stream = SampleStream(seed=5, m=1)
        assert all(stream.next_index() == 1 for _ in range(1000))

    def test_same_seed_same_sequence(self):
        first = SampleStream(seed=42, m=100).take(100_000)
        second = SampleStream(seed=42, m=100).take(100_000)
        np.testing.assert_array_equal(first, second)

    def test_different_seeds_differ(self):
        first = SampleStream(seed=1, m=100).take(1000)
        second = SampleStream(seed=2, m=100).take(1000)
        assert not np.array_equal(first, second)

    def test_take_matches_next_index(self):
        """Test mixing take and next_index across block boundaries reads one sequence."""
        reference = SampleStream(seed=9, m=17).take(3 * BLOCK_SIZE)
        stream = SampleStream(seed=9, m=17)
        mixed = [stream.next_index() for _ in range(10)]
        mixed.extend(stream.take(BLOCK_SIZE))
        mixed.extend(stream.next_index() for _ in range(BLOCK_SIZE - 3))
        mixed.extend(stream.take(len(reference) - len(mixed)))

        np.testing.assert_array_equal(np.array(mixed), reference)
        assert stream.position == 3 * BLOCK_SIZE

    def test_range(self):
        draws = SampleStream(seed=0, m=7).take(50_000)
        assert draws.min() == 1
        assert draws.max() == 7

    def test_fork_replays_from_start(self):
        """Test fork is independent of the original's position."""
        stream = SampleStream(seed=11, m=50)
        head = stream.take(500)
        fork = stream.fork()

        assert fork.position == 0
        assert (fork.seed, fork.m) == (stream.seed, stream.m)
        np.testing.assert_array_equal(fork.take(500), head)
        np.testing.assert_array_equal(fork.fork().take(500), head)

    def test_uniformity(self):
        """Test 10^6 draws over m = 100 pass a chi-square test."""
        draws = SampleStream(seed=2024, m=100).take(1_000_000)
        counts = np.bincount(draws, minlength=101)[1:]

        assert stats.chisquare(counts).pvalue > 1e-6
        expected = 10_000
        sd = np.sqrt(1_000_000 * 0.01 * 0.99)
        assert np.all(np.abs(counts - expected) <= 5 * sd)

    @pytest.mark.parametrize('seed', [-1, 2**64])
    def test_seed_range(self, seed):
        with pytest.raises(ValueError):
            SampleStream(seed=seed, m=10)

    def test_seed_type(self):
        with pytest.raises(TypeError):
            SampleStream(seed='7', m=10)

    @pytest.mark.parametrize('m', [0, -3, 2.5])
    def test_invalid_m(self, m):
        with pytest.raises(ValueError):
            SampleStream(seed=0, m=m)

    def test_negative_take(self):
        with pytest.raises(ValueError):
            SampleStream(seed=0, m=3).take(-1)
