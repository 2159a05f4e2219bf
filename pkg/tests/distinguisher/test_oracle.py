import numpy as np
import pytest

from rxneural.ciphers import Block, MasterKey
from rxneural.data import (
    BaseFormat,
    DataFormatSpec,
    HalfRxDifference,
    RxKeyPair,
    build_samples,
    generate_dataset,
)
from rxneural.distinguisher import RoundTripOracle, StructureOracle
from rxneural.error import InvalidArgumentError

D = HalfRxDifference(15, 0x3)
SPEC = DataFormatSpec(BaseFormat.D2, 1, 15, 4)


@pytest.fixture
def states():
    rng = np.random.default_rng(8)
    words = lambda: rng.integers(0, 1 << 16, (6, 1), dtype=np.uint16)
    return Block(words(), words()), Block(words(), words())


def samples(s, s_prime):
    return build_samples("simon", SPEC, s, s_prime)


class TestRoundTripOracle:
    """The oracle that knows the keys."""

    def test_separates_real_from_random(self):
        """Test that real samples score hit and random ones miss."""
        key_pair = RxKeyPair.related(MasterKey((1, 2, 3, 4)), D.lam)
        ds = generate_dataset("simon", SPEC, D, 4, 100, seed=2, key_pair=key_pair)
        oracle = RoundTripOracle("simon", key_pair, D, SPEC, 4)
        scores = oracle.score_batch(ds.X)
        assert np.all(scores[ds.y == 1] == 0.9)
        assert np.all(scores[ds.y == 0] == 0.5)

    def test_needs_ciphertexts(self):
        """Test that formats without both ciphertexts are refused."""
        key_pair = RxKeyPair.related(MasterKey((1, 2, 3, 4)), D.lam)
        with pytest.raises(InvalidArgumentError):
            RoundTripOracle("simon", key_pair, D, DataFormatSpec(BaseFormat.D5, 1, 15, 4), 4)


class TestStructureOracle:
    """The oracle bound to true intermediate states."""

    def test_graded_true_states_score_hit(self, states):
        """Test the response at distance zero."""
        oracle = StructureOracle(SPEC, states)
        assert np.allclose(oracle.score_batch(samples(*states)), 0.9)

    def test_graded_response(self, states):
        """Test that the response decays with the masked distance."""
        s, s_prime = states
        oracle = StructureOracle(SPEC, states)
        one = samples(Block(s.left, s.right ^ np.uint16(1)), s_prime)
        two = samples(Block(s.left, s.right ^ np.uint16(1)), Block(s_prime.left, s_prime.right ^ np.uint16(0x8000)))
        assert np.allclose(oracle.score_batch(one), 0.5 + 0.4 * 0.8)
        assert np.allclose(oracle.score_batch(two), 0.5 + 0.4 * 0.8 ** 2)

    def test_mask_hides_bits(self, states):
        """Test that differences outside the masks do not count."""
        s, s_prime = states
        oracle = StructureOracle(SPEC, states, mask_a=0xFFFE)
        assert np.allclose(oracle.score_batch(samples(Block(s.left, s.right ^ np.uint16(1)), s_prime)), 0.9)

    def test_step_response(self, states):
        """Test that a step oracle only rewards the exact state."""
        s, s_prime = states
        oracle = StructureOracle(SPEC, states, step=True)
        assert np.allclose(oracle.score_batch(samples(Block(s.left, s.right ^ np.uint16(1)), s_prime)), 0.5)

    def test_unregistered_states_score_miss(self, states):
        """Test that unknown left words give the miss response."""
        s, s_prime = states
        oracle = StructureOracle(SPEC, states)
        assert np.allclose(oracle.score_batch(samples(Block(s.left ^ np.uint16(1), s.right), s_prime)), 0.5)

    def test_noise_is_bounded_and_deterministic(self, states):
        """Test that noise stays within its amplitude and depends only on the sample."""
        oracle = StructureOracle(SPEC, states, noise=0.05)
        X = samples(*states)
        scores = oracle.score_batch(X)
        assert np.all(np.abs(scores - 0.9) <= 0.05)
        assert np.array_equal(scores, oracle.score_batch(X))

    @pytest.mark.parametrize("kwargs", [{"noise": 0.6}, {"hit": 1.0}, {"noise": -0.1}])
    def test_invalid(self, states, kwargs):
        """Test response validation."""
        with pytest.raises(InvalidArgumentError):
            StructureOracle(SPEC, states, **kwargs)

    def test_graded_wkr_profile(self, states):
        """Test the exact single-key profile of the graded response."""
        profile = StructureOracle(SPEC, states).wkr_profile(SPEC.lam)
        assert profile.mu.shape == (1 << 16,)
        assert profile.mu[0] == pytest.approx(0.9)
        # delta 1 moves the first subkey by one bit and the second by its rotation
        assert profile.mu[1] == pytest.approx(0.5 + 0.4 * 0.8 ** 2)

    def test_graded_jwkr_profile(self, states):
        """Test the exact joint profile of the graded response over sensitive bits."""
        profile = StructureOracle(SPEC, states).jwkr_profile([0, 3], [1, 2, 5])
        assert profile.mu.shape == (4, 8)
        assert profile.mu[0, 0] == pytest.approx(0.9)
        assert profile.mu[3, 7] == pytest.approx(0.5 + 0.4 * 0.8 ** 5)
