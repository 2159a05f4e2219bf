import numpy as np

from rxneural.data import CounterRng, derive_seed, map_chunks
from rxneural.data.rng import chunk_bounds


class TestDeriveSeed:
    """Sub-seed derivation."""

    def test_deterministic(self):
        """Test that the same tags give the same sub-seed."""
        assert derive_seed(42, 1, 2) == derive_seed(42, 1, 2)

    def test_tags_separate_streams(self):
        """Test that different tags, tag orders and parents give different sub-seeds."""
        seeds = {derive_seed(42, 1), derive_seed(42, 2), derive_seed(43, 1), derive_seed(42, 1, 2),
                 derive_seed(42, 2, 1)}
        assert len(seeds) == 5

    def test_fits_in_64_bits(self):
        """Test the range of derived seeds."""
        for tag in range(100):
            assert 0 <= derive_seed(2 ** 64 - 1, tag) < 2 ** 64


class TestCounterRng:
    """Counter-based streams."""

    def test_values_depend_only_on_index(self):
        """Test that any subset of indices reproduces the full stream."""
        rng = CounterRng(7)
        full = rng.words(np.arange(100), 3)
        subset = rng.words(np.asarray([57, 3, 99, 0]), 3)
        assert np.array_equal(subset, full[[57, 3, 99, 0]])

    def test_lanes_are_independent(self):
        """Test that lanes give different streams."""
        rng = CounterRng(7)
        assert not np.array_equal(rng.words(np.arange(64), 0), rng.words(np.arange(64), 1))

    def test_value_ranges(self):
        """Test the ranges of bits and uniforms."""
        rng = CounterRng(11)
        bits = rng.bits(np.arange(10000), 0)
        u = rng.uniform(np.arange(10000), 0)
        assert set(np.unique(bits).tolist()) == {0, 1}
        assert 0.45 < bits.mean() < 0.55
        assert u.min() >= 0.0 and u.max() < 1.0


class TestMapChunks:
    """The deterministic worker pool."""

    def test_chunk_bounds(self):
        """Test that chunks cover the range in order."""
        assert chunk_bounds(10, 4) == [(0, 4), (4, 8), (8, 10)]
        assert chunk_bounds(0, 4) == []

    def test_result_independent_of_workers(self):
        """Test that results come back in chunk order for any worker count."""
        rng = CounterRng(5)

        def work(start, stop):
            return rng.words(np.arange(start, stop), 0)

        single = np.concatenate(map_chunks(work, 1000, workers=1, chunk_size=64))
        many = np.concatenate(map_chunks(work, 1000, workers=4, chunk_size=64))
        assert np.array_equal(single, many)
        assert np.array_equal(single, rng.words(np.arange(1000), 0))
