import numpy as np
import pytest

from rxneural.ciphers import Block, MasterKey, Simon32, get_cipher, rol
from rxneural.data import (
    BaseFormat,
    DataFormatSpec,
    HalfRxDifference,
    RxKeyPair,
    bits_to_words,
    build_sample,
    build_samples,
    decode_ciphertexts,
    enumerate_half_rxd,
    make_rx_plaintext_pair,
    rx_difference,
    words_to_bits,
)
from rxneural.data.formats import DL_R, DR_R
from rxneural.error import InvalidArgumentError

SIMON_TABLE = ["[15, 0x3]", "[1, 0x6]", "[12, 0x2002]", "[4, 0x22]", "[3, 0x12]", "[13, 0x4002]"]
SIMECK_TABLE = ["[1, 0x4]", "[15, 0x2]", "[15, 0x3]", "[1, 0x6]", "[6, 0x82]", "[10, 0x802]"]


def random_pairs(seed, n, k):
    rng = np.random.default_rng(seed)
    words = lambda: rng.integers(0, 1 << 16, (n, k), dtype=np.uint16)
    return Block(words(), words()), Block(words(), words())


class TestHalfRxDifference:
    """Half RX-differences and related keys."""

    def test_parse_and_format(self):
        """Test the accepted notations."""
        assert HalfRxDifference.parse("[15, 0x3]") == HalfRxDifference(15, 3)
        assert HalfRxDifference.parse("4,22") == HalfRxDifference(4, 0x22)
        assert HalfRxDifference.parse("1:4") == HalfRxDifference(1, 4)
        assert str(HalfRxDifference(12, 0x2002)) == "[12, 0x2002]"

    @pytest.mark.parametrize("lam,delta", [(0, 1), (16, 1), (3, 0x10000)])
    def test_out_of_range(self, lam, delta):
        """Test that rotation offsets and words are range-checked."""
        with pytest.raises(InvalidArgumentError):
            HalfRxDifference(lam, delta)

    def test_plaintext_pair_has_the_difference(self):
        """Test that the partner plaintext realises (0, delta_r)."""
        d = HalfRxDifference(4, 0x22)
        p = Block(np.arange(100, dtype=np.uint16), np.arange(100, 200, dtype=np.uint16))
        dl, dr = rx_difference(p, make_rx_plaintext_pair(p, d), d.lam)
        assert np.all(dl == 0)
        assert np.all(dr == 0x22)

    def test_related_key_pair(self):
        """Test that only K' = K <<< lambda is accepted."""
        k = MasterKey((1, 2, 3, 4))
        pair = RxKeyPair.related(k, 3)
        assert pair.k_prime == MasterKey((8, 16, 24, 32))
        with pytest.raises(InvalidArgumentError):
            RxKeyPair(k, k, 3)


class TestEnumeration:
    """Enumeration of candidate half RX-differences."""

    def test_count_with_weight_two(self):
        """Test that weights 1 and 2 give 2040 candidates."""
        assert len(enumerate_half_rxd(2)) == 2040

    def test_count_with_weight_one(self):
        """Test that weight 1 gives 15 * 16 candidates."""
        assert len(enumerate_half_rxd(1)) == 240

    def test_contains_table_entries(self):
        """Test that the best known differences of both ciphers are enumerated."""
        names = {str(d) for d in enumerate_half_rxd(2)}
        assert set(SIMON_TABLE) <= names
        assert set(SIMECK_TABLE) <= names

    def test_order(self):
        """Test lambda-major, delta-minor order without duplicates."""
        candidates = enumerate_half_rxd(2)
        keys = [(d.lam, d.delta_r) for d in candidates]
        assert keys == sorted(keys)
        assert len(set(keys)) == len(keys)

    def test_invalid_weight(self):
        """Test that only weights 1 and 2 are supported."""
        with pytest.raises(InvalidArgumentError):
            enumerate_half_rxd(3)


class TestDataFormatSpec:
    """Component layout of the data formats."""

    @pytest.mark.parametrize("base,components", [("D1", 8), ("D2", 4), ("D3", 5), ("D4", 2), ("D5", 3), ("D6", 2),
                                                 ("D7", 2), ("D8", 2)])
    def test_widths(self, base, components):
        """Test the width of every base format."""
        spec = DataFormatSpec(BaseFormat.parse(base), 1, 15, 8)
        assert spec.width == 16 * components

    def test_multi_pair_width(self):
        """Test that k pairs multiply the width."""
        assert DataFormatSpec(BaseFormat.D5, 28, 4, 13).width == 28 * 48
        assert DataFormatSpec(BaseFormat.D7, 36, 1, 15).width == 36 * 32
        assert str(DataFormatSpec(BaseFormat.D7, 36, 1, 15)) == "D7^36"

    def test_parse_base(self):
        """Test the accepted notations of base formats."""
        assert BaseFormat.parse("d5") is BaseFormat.D5
        assert BaseFormat.parse(7) is BaseFormat.D7
        with pytest.raises(InvalidArgumentError):
            BaseFormat.parse("D9")

    def test_only_d1_and_d2_carry_ciphertexts(self):
        """Test which formats allow decoding the ciphertexts."""
        assert [b.name for b in BaseFormat if b.carries_ciphertexts] == ["D1", "D2"]

    def test_invalid_pairs(self):
        """Test that k must be positive."""
        with pytest.raises(InvalidArgumentError):
            DataFormatSpec(BaseFormat.D1, 0, 15, 8)


class TestBuildSamples:
    """Sample construction from ciphertext pairs."""

    @pytest.fixture
    def simon(self):
        return Simon32()

    def test_words_to_bits_is_msb_first(self):
        """Test the bit order within a word."""
        bits = words_to_bits(np.asarray([0x8001], dtype=np.uint16))
        assert bits.tolist() == [1] + [0] * 14 + [1]
        assert bits_to_words(bits).tolist() == [0x8001]

    def test_plaintext_pair_components(self, simon):
        """Test the RX-difference components of an unencrypted real pair."""
        d = HalfRxDifference(15, 0x3)
        spec = DataFormatSpec(BaseFormat.D1, 1, d.lam, 0)
        p = Block(np.asarray([[0x1234]], dtype=np.uint16), np.asarray([[0xABCD]], dtype=np.uint16))
        X = build_samples(simon, spec, p, make_rx_plaintext_pair(p, d))
        words = bits_to_words(X)[0]
        assert words[spec.bit_offset(DL_R) // 16] == 0
        assert words[spec.bit_offset(DR_R) // 16] == 0x3

    @pytest.mark.parametrize("small,large", [("D3", "D1"), ("D5", "D3"), ("D6", "D5"), ("D7", "D5"), ("D8", "D5")])
    def test_reduced_formats_select_bits(self, simon, small, large):
        """Test that a reduced format is a bit selection of the larger one on the same pairs."""
        c, c_prime = random_pairs(1, 50, 3)
        small_spec = DataFormatSpec(BaseFormat.parse(small), 3, 15, 8)
        large_spec = DataFormatSpec(BaseFormat.parse(large), 3, 15, 8)
        X_small = build_samples(simon, small_spec, c, c_prime)
        X_large = build_samples(simon, large_spec, c, c_prime)
        assert np.array_equal(X_small, X_large[:, small_spec.positions_of(large_spec)])

    def test_pairs_are_concatenated_in_order(self, simon):
        """Test that a k-pair sample is the concatenation of single-pair samples."""
        c, c_prime = random_pairs(2, 10, 2)
        spec2 = DataFormatSpec(BaseFormat.D5, 2, 15, 8)
        spec1 = DataFormatSpec(BaseFormat.D5, 1, 15, 8)
        X = build_samples(simon, spec2, c, c_prime)
        first = build_samples(simon, spec1, Block(c.left[:, :1], c.right[:, :1]),
                              Block(c_prime.left[:, :1], c_prime.right[:, :1]))
        second = build_samples(simon, spec1, Block(c.left[:, 1:], c.right[:, 1:]),
                               Block(c_prime.left[:, 1:], c_prime.right[:, 1:]))
        assert np.array_equal(X, np.concatenate([first, second], axis=1))

    def test_single_sample_matches_batch(self, simon):
        """Test build_sample against build_samples."""
        c, c_prime = random_pairs(3, 1, 2)
        spec = DataFormatSpec(BaseFormat.D1, 2, 4, 8)
        pairs = [(Block(int(c.left[0, j]), int(c.right[0, j])), Block(int(c_prime.left[0, j]),
                                                                       int(c_prime.right[0, j])))
                 for j in range(2)]
        assert np.array_equal(build_sample(simon, spec, pairs), build_samples(simon, spec, c, c_prime)[0])

    def test_wrong_pair_count(self, simon):
        """Test that the number of pairs must match k."""
        c, c_prime = random_pairs(4, 5, 2)
        with pytest.raises(InvalidArgumentError):
            build_samples(simon, DataFormatSpec(BaseFormat.D5, 3, 15, 8), c, c_prime)

    def test_decode_ciphertexts(self, simon):
        """Test that D2 samples give back their ciphertexts."""
        c, c_prime = random_pairs(5, 20, 4)
        spec = DataFormatSpec(BaseFormat.D2, 4, 12, 8)
        dc, dc_prime = decode_ciphertexts(spec, build_samples(simon, spec, c, c_prime))
        assert dc == c
        assert dc_prime == c_prime
        with pytest.raises(InvalidArgumentError):
            decode_ciphertexts(DataFormatSpec(BaseFormat.D5, 1, 12, 8), np.zeros((1, 48), dtype=np.uint8))

    def test_zero_key_components_use_the_cipher(self):
        """Test that the zero-key decryption components differ between the ciphers."""
        c, c_prime = random_pairs(6, 20, 1)
        spec = DataFormatSpec(BaseFormat.D6, 1, 1, 8)
        assert not np.array_equal(build_samples(get_cipher("simon"), spec, c, c_prime),
                                  build_samples(get_cipher("simeck"), spec, c, c_prime))

    def test_rotation_in_components(self, simon):
        """Test the rotated ciphertext components of D2."""
        c, c_prime = random_pairs(7, 3, 1)
        spec = DataFormatSpec(BaseFormat.D2, 1, 5, 8)
        words = bits_to_words(build_samples(simon, spec, c, c_prime))
        assert np.array_equal(words[:, 0], rol(c.left[:, 0], 5))
        assert np.array_equal(words[:, 3], c_prime.right[:, 0])

    @pytest.mark.parametrize("base", ["D1", "D2", "D3", "D5"])
    def test_many_keys_after_one_round_decryption(self, simon, base):
        """Test samples peeled under an array of keys against one key at a time."""
        c, c_prime = random_pairs(8, 6, 2)
        spec = DataFormatSpec(BaseFormat.parse(base), 2, 15, 7)
        keys = np.asarray([0x0000, 0x1234, 0xFFFF], dtype=np.uint16)
        x = simon.decrypt_round(Block(c.left[None], c.right[None]), keys[:, None, None])
        x_prime = simon.decrypt_round(Block(c_prime.left[None], c_prime.right[None]), keys[:, None, None])
        X = build_samples(simon, spec, x, x_prime)
        assert X.shape == (3, 6, spec.width)
        for i, k in enumerate(keys):
            one = build_samples(simon, spec, simon.decrypt_round(c, k), simon.decrypt_round(c_prime, k))
            assert np.array_equal(X[i], one)
