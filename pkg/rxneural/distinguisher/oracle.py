"""Synthetic distinguishers with known behaviour, used to verify the key-recovery machinery."""

from typing import Optional, Sequence, Tuple
import logging
import math

import numpy as np

from ..ciphers import Block, MASK, get_cipher, hamming_weight, rol
from ..data import DataFormatSpec, HalfRxDifference, RxKeyPair, decode_ciphertexts, rx_difference
from ..data.rng import splitmix64
from ..error import InvalidArgumentError
from .base import Distinguisher
from .model import EPS


def _require_ciphertexts(spec: DataFormatSpec) -> None:
    if not spec.base.carries_ciphertexts:
        raise InvalidArgumentError(f"Oracles need a format carrying both ciphertexts, got {spec.base.name}")


class RoundTripOracle(Distinguisher):
    """
    Scores `hit` when decrypting a sample's ciphertexts with the true keys
    lands on a plaintext pair with the expected input difference, else `miss`.
    """

    def __init__(self, cipher, key_pair: RxKeyPair, d: HalfRxDifference, spec: DataFormatSpec, rounds: int,
                 hit: float = 0.9, miss: float = 0.5, logger: Optional[logging.Logger] = None):
        _require_ciphertexts(spec)
        super().__init__(spec.width, f"round-trip-oracle-{rounds}r", logger)
        self.cipher = get_cipher(cipher)
        self.key_pair = key_pair
        self.d = d
        self.spec = spec
        self.rounds = rounds
        self.hit = hit
        self.miss = miss
        self._rk = self.cipher.key_schedule(key_pair.k, rounds)
        self._rk_prime = self.cipher.key_schedule(key_pair.k_prime, rounds)

    def _score(self, X: np.ndarray) -> np.ndarray:
        c, c_prime = decode_ciphertexts(self.spec, X)
        p = self.cipher.decrypt(c, self._rk)
        p_prime = self.cipher.decrypt(c_prime, self._rk_prime)
        dl, dr = rx_difference(p, p_prime, self.d.lam)
        ok = np.all((dl == 0) & (dr == self.d.delta_r), axis=1)
        return np.where(ok, self.hit, self.miss).astype(np.float64)


class StructureOracle(Distinguisher):
    """
    Scorer bound to the true intermediate states of one ciphertext structure.

     A sample is read as a pair of candidate states (X, X'). When its left
     words match a registered true state the right words reveal the key
     differences (d, d') used to reach it, and the response is
     miss + (hit - miss) * decay ** (hw(d & mask_a) + hw(d' & mask_b)),
     or a step between hit and miss. Unregistered samples score `miss`.
    """

    def __init__(self, spec: DataFormatSpec, states: Tuple[Block, Block], mask_a: int = MASK, mask_b: int = MASK,
                 hit: float = 0.9, miss: float = 0.5, decay: float = 0.8, step: bool = False,
                 noise: float = 0.0, logger: Optional[logging.Logger] = None):
        _require_ciphertexts(spec)
        if not 0.0 < miss < 1.0 or not 0.0 < hit < 1.0:
            raise InvalidArgumentError("Oracle responses must lie in (0, 1)")
        if noise < 0 or miss - noise <= 0 or hit + noise >= 1:
            raise InvalidArgumentError(f"Noise {noise} pushes responses outside (0, 1)")
        super().__init__(spec.width, "structure-oracle", logger)
        self.spec = spec
        self.mask_a = mask_a
        self.mask_b = mask_b
        self.hit = hit
        self.miss = miss
        self.decay = decay
        self.step = step
        self.noise = noise
        s, s_prime = states
        keys = ((np.asarray(s.left, dtype=np.uint32).ravel() << 16)
                | np.asarray(s_prime.left, dtype=np.uint32).ravel())
        if keys.size == 0:
            raise InvalidArgumentError("A structure oracle needs at least one registered state")
        order = np.argsort(keys, kind="stable")
        self._keys = keys[order]
        self._right = np.asarray(s.right, dtype=np.uint16).ravel()[order]
        self._right_prime = np.asarray(s_prime.right, dtype=np.uint16).ravel()[order]

    def response(self, distance) -> np.ndarray:
        """Noise-free response for a masked Hamming distance."""
        distance = np.asarray(distance)
        if self.step:
            return np.where(distance == 0, self.hit, self.miss).astype(np.float64)
        return self.miss + (self.hit - self.miss) * np.power(self.decay, distance.astype(np.float64))

    def _score(self, X: np.ndarray) -> np.ndarray:
        x, x_prime = decode_ciphertexts(self.spec, X)
        keys = (x.left.astype(np.uint32) << 16) | x_prime.left.astype(np.uint32)
        pos = np.minimum(np.searchsorted(self._keys, keys), self._keys.size - 1)
        found = self._keys[pos] == keys
        d = (x.right ^ self._right[pos]) & self.mask_a
        d_prime = (x_prime.right ^ self._right_prime[pos]) & self.mask_b
        distance = hamming_weight(d).astype(np.int64) + hamming_weight(d_prime).astype(np.int64)
        per_pair = np.where(found, self.response(distance), self.miss)
        scores = per_pair.mean(axis=1)
        if self.noise > 0:
            scores = scores + self.noise * (2.0 * _sample_hash_uniform(X) - 1.0)
        return np.clip(scores, EPS, 1.0 - EPS)

    def noise_std(self) -> float:
        return self.noise / math.sqrt(3.0)

    def wkr_profile(self, lam: int, round_index: int = 0):
        """Exact single-key profile when the second subkey moves by the first's rotation."""
        from ..keyrank.profiles import WkrProfile

        delta = np.arange(1 << 16, dtype=np.uint16)
        distance = (hamming_weight(delta & self.mask_a).astype(np.int64)
                    + hamming_weight(rol(delta, lam) & self.mask_b).astype(np.int64))
        mu = self.response(distance)
        sigma = np.full(mu.shape, self.noise_std())
        return WkrProfile(mu, sigma, {"distinguisher": self.describe(), "round_index": round_index, "exact": True})

    def jwkr_profile(self, sens_a: Sequence[int], sens_b: Sequence[int], round_index: int = 0):
        """Exact joint profile over the given sensitive bit sets."""
        from ..keyrank.profiles import JwkrProfile, expand_bits

        a = expand_bits(np.arange(1 << len(sens_a)), sens_a)
        b = expand_bits(np.arange(1 << len(sens_b)), sens_b)
        distance = (hamming_weight(a & self.mask_a).astype(np.int64)[:, None]
                    + hamming_weight(b & self.mask_b).astype(np.int64)[None, :])
        mu = self.response(distance)
        sigma = np.full(mu.shape, self.noise_std())
        return JwkrProfile(tuple(sens_a), tuple(sens_b), mu, sigma,
                           {"distinguisher": self.describe(), "round_index": round_index, "exact": True})


def _sample_hash_uniform(X: np.ndarray) -> np.ndarray:
    """A pure function of each sample's bits, uniform in [0, 1)."""
    packed = np.packbits(np.asarray(X, dtype=np.uint8), axis=1).astype(np.uint64)
    h = np.zeros(packed.shape[0], dtype=np.uint64)
    for col in range(packed.shape[1]):
        h = splitmix64(h ^ (packed[:, col] << np.uint64(8 * (col % 7))))
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)
