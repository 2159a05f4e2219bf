"""Bit sensitivity tests over ciphertext bits and over last-round subkey bits."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence
import csv
import json
import logging
import math
import os

import numpy as np

from .ciphers import Block, MasterKey, get_cipher
from .data import (
    CounterRng,
    DataFormatSpec,
    HalfRxDifference,
    RxKeyPair,
    build_samples,
    derive_seed,
    generate_dataset,
)
from .data.rng import map_chunks
from .distinguisher import Distinguisher
from .distinguisher.training import report_from_scores, score_dataset
from .error import InvalidArgumentError, ProfileFileError

logger = logging.getLogger(__name__)

PROFILE_FORMAT = "rxneural-sensitivity"
PROFILE_VERSION = 1
DEFAULT_THRESHOLD = 0.02


class XorType(Enum):
    """Which ciphertext of a pair the BST mask is applied to"""
    TYPE1 = "TYPE1"  # C only
    TYPE2 = "TYPE2"  # C' only
    TYPE3 = "TYPE3"  # both


class KeyMaskType(Enum):
    """Value of the KBST mask bit"""
    KTYPE1 = "KTYPE1"  # random bit per group
    KTYPE2 = "KTYPE2"  # constant 1


@dataclass(frozen=True)
class BstConfig:
    xor_type: XorType = XorType.TYPE1
    n_samples: int = 1 << 14
    bit_positions: Optional[Sequence[int]] = None
    force_zero_mask: bool = False

    def __post_init__(self):
        object.__setattr__(self, "xor_type", XorType(self.xor_type))
        if self.n_samples < 1:
            raise InvalidArgumentError(f"BST needs at least 1 sample, got {self.n_samples}")
        positions = tuple(range(32)) if self.bit_positions is None else tuple(self.bit_positions)
        if not positions or any(not 0 <= p < 32 for p in positions):
            raise InvalidArgumentError(f"Bit positions must lie in 0..31, got {positions}")
        object.__setattr__(self, "bit_positions", positions)


@dataclass(frozen=True)
class KbstConfig:
    mask_type: KeyMaskType = KeyMaskType.KTYPE1
    n_groups: int = 10 ** 4
    bit_positions: Optional[Sequence[int]] = None
    symmetric: bool = True
    force_zero_mask: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mask_type", KeyMaskType(self.mask_type))
        if self.n_groups < 1:
            raise InvalidArgumentError(f"KBST needs at least 1 group, got {self.n_groups}")
        positions = tuple(range(16)) if self.bit_positions is None else tuple(self.bit_positions)
        if not positions or any(not 0 <= p < 16 for p in positions):
            raise InvalidArgumentError(f"Key bit positions must lie in 0..15, got {positions}")
        object.__setattr__(self, "bit_positions", positions)


@dataclass
class SensitivityProfile:
    """Accuracy drop per bit position; NaN marks positions that were not tested."""
    values: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        tested = self.values[~np.isnan(self.values)]
        if np.any(np.abs(tested) > 1.0):
            raise InvalidArgumentError("Sensitivities must lie in [-1, 1]")

    @property
    def noise_level(self) -> float:
        n = self.metadata.get("n_samples")
        return 2.0 / math.sqrt(n) if n else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": PROFILE_FORMAT,
            "version": PROFILE_VERSION,
            "metadata": {**self.metadata, "noise_level": self.noise_level},
            "values": [None if np.isnan(v) else float(v) for v in self.values],
        }


def sensitive_bits(profile: SensitivityProfile, threshold: float = DEFAULT_THRESHOLD) -> List[int]:
    """Positions whose |sensitivity| exceeds the threshold, ascending."""
    if threshold < 0:
        raise InvalidArgumentError(f"Threshold must be non-negative, got {threshold}")
    values = np.nan_to_num(profile.values, nan=0.0)
    return [int(p) for p in np.flatnonzero(np.abs(values) > threshold)]


def save_profile(profile: SensitivityProfile, path: str) -> None:
    with open(path, "w") as f:
        json.dump(profile.to_dict(), f, indent=2)


def load_profile(path: str) -> SensitivityProfile:
    if not os.path.isfile(path):
        raise ProfileFileError("Sensitivity profile not found", path=path)
    try:
        with open(path, "r") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ProfileFileError(f"Corrupt sensitivity profile: {e}", path=path) from e
    if doc.get("format") != PROFILE_FORMAT or doc.get("version") != PROFILE_VERSION:
        raise ProfileFileError("Not a sensitivity profile of a supported version", path=path)
    values = [float("nan") if v is None else v for v in doc["values"]]
    metadata = {k: v for k, v in doc.get("metadata", {}).items() if k != "noise_level"}
    return SensitivityProfile(np.asarray(values), metadata)


def write_profile_csv(profile: SensitivityProfile, path: str) -> None:
    with open(path, "w", newline="") as f:
        if profile.metadata.get("config_hash"):
            f.write(f"# config_hash={profile.metadata['config_hash']}\n")
        writer = csv.writer(f)
        writer.writerow(["bit", "sensitivity"])
        for bit, value in enumerate(profile.values):
            writer.writerow([bit, "" if np.isnan(value) else repr(float(value))])


def _accuracy(model: Distinguisher, X: np.ndarray, y: np.ndarray) -> float:
    return report_from_scores(score_dataset(model, X), y).accuracy


def _check_width(model: Distinguisher, spec: DataFormatSpec) -> None:
    if model.input_width != spec.width:
        raise InvalidArgumentError(f"Model width {model.input_width} does not match {spec} ({spec.width})")


def apply_bit_mask(c: Block, c_prime: Block, position: int, mask_bits: np.ndarray, xor_type: XorType):
    """
    XOR a single-bit mask into ciphertexts.

    Args:
        c: First ciphertexts
        c_prime: Related ciphertexts
        position: Bit of the 32-bit block; 16..31 address the left branch
        mask_bits: 0/1 per ciphertext pair, same shape as the words
        xor_type: Which ciphertexts receive the mask

    Returns:
        The modified (C, C')
    """
    mask = (mask_bits.astype(np.uint16) << np.uint16(position % 16)).astype(np.uint16)

    def flip(block: Block) -> Block:
        if position >= 16:
            return Block(block.left ^ mask, block.right)
        return Block(block.left, block.right ^ mask)

    new_c = flip(c) if xor_type in (XorType.TYPE1, XorType.TYPE3) else c
    new_c_prime = flip(c_prime) if xor_type in (XorType.TYPE2, XorType.TYPE3) else c_prime
    return new_c, new_c_prime


def bst(model: Distinguisher, cipher, d: HalfRxDifference, spec: DataFormatSpec, rounds: int, cfg: BstConfig,
        seed: int, workers: int = 1) -> SensitivityProfile:
    """
    Bit sensitivity test over the 32 ciphertext bit positions.

    Each position gets a fresh validation set; a random bit is XORed at that
    position into C, C' or both of every pair, samples are rebuilt and the
    accuracy drop against the unmodified set is recorded.

    Args:
        model: Distinguisher matching spec
        cipher: Cipher name, id or instance
        d: Input half RX-difference
        spec: Data format
        rounds: Rounds of encryption of the validation data
        cfg: Test settings
        seed: Seed
        workers: Worker threads, one bit position per task

    Returns:
        SensitivityProfile of 32 entries, untested positions NaN
    """
    _check_width(model, spec)
    cipher = get_cipher(cipher)
    positions = list(cfg.bit_positions)

    def one_position(start: int, stop: int) -> float:
        p = positions[start]
        pos_seed = derive_seed(seed, p)
        ds = generate_dataset(cipher, spec, d, rounds, cfg.n_samples, pos_seed)
        c, c_prime = ds.ciphertexts
        base = _accuracy(model, ds.X, ds.y)
        if cfg.force_zero_mask:
            bits = np.zeros(c.left.shape, dtype=np.uint8)
        else:
            rng = CounterRng(derive_seed(pos_seed, 0xB57))
            idx = np.arange(c.left.size, dtype=np.uint64)
            bits = rng.bits(idx, 0).reshape(c.left.shape)
        mc, mc_prime = apply_bit_mask(c, c_prime, p, bits, cfg.xor_type)
        modified = _accuracy(model, build_samples(cipher, spec, mc, mc_prime), ds.y)
        logger.info(f"BST bit {p}: base={base:.4f} modified={modified:.4f}")
        return base - modified

    drops = map_chunks(one_position, len(positions), workers=workers, chunk_size=1)
    values = np.full(32, np.nan)
    values[positions] = drops
    return SensitivityProfile(values, {
        "test": "bst", "distinguisher": model.describe(), "cipher": cipher.cipher_id.value,
        "half_rxd": str(d), "format": str(spec), "rounds": rounds, "type": cfg.xor_type.value,
        "n_samples": cfg.n_samples, "seed": seed,
    })


def kbst(model: Distinguisher, cipher, d: HalfRxDifference, spec: DataFormatSpec, distinguisher_rounds: int,
         target_round: int, cfg: KbstConfig, seed: int, workers: int = 1) -> SensitivityProfile:
    """
    Key-bit sensitivity test of the subkey of round `target_round`.

    One related-key pair encrypts n_groups balanced groups of spec.k pairs for
    target_round rounds. The last round is peeled with the true subkey pair
    (baseline) and with the pair after a single-bit mask (per position), and
    the accuracy drop is recorded.

    Args:
        model: Distinguisher over distinguisher_rounds rounds
        cipher: Cipher name, id or instance
        d: Input half RX-difference
        spec: Data format
        distinguisher_rounds: Rounds covered by the model
        target_round: 1-based round whose subkey is tested; distinguisher_rounds + 1
        cfg: Test settings
        seed: Seed
        workers: Worker threads, one bit position per task

    Returns:
        SensitivityProfile of 16 entries, untested positions NaN
    """
    if target_round != distinguisher_rounds + 1:
        raise InvalidArgumentError(
            f"KBST targets the round after the distinguisher ({distinguisher_rounds + 1}), got {target_round}"
        )
    _check_width(model, spec)
    cipher = get_cipher(cipher)
    key_rng = CounterRng(derive_seed(seed, 0x4B))
    key = MasterKey(tuple(int(key_rng.words([0], j)[0]) for j in range(4)))
    key_pair = RxKeyPair.related(key, d.lam)
    ds = generate_dataset(cipher, spec, d, target_round, cfg.n_groups, derive_seed(seed, 0x44), key_pair=key_pair)
    c, c_prime = ds.ciphertexts
    index = target_round - 1
    rk = int(cipher.key_schedule(key_pair.k, target_round)[index])
    rk_prime = int(cipher.key_schedule(key_pair.k_prime, target_round)[index])

    def peel(k, k_prime) -> float:
        x = cipher.decrypt_round(c, k)
        x_prime = cipher.decrypt_round(c_prime, k_prime)
        return _accuracy(model, build_samples(cipher, spec, x, x_prime), ds.y)

    base = peel(rk, rk_prime)
    positions = list(cfg.bit_positions)

    def one_position(start: int, stop: int) -> float:
        b = positions[start]
        if cfg.force_zero_mask:
            bits = np.zeros(cfg.n_groups, dtype=np.uint16)
        elif cfg.mask_type is KeyMaskType.KTYPE2:
            bits = np.ones(cfg.n_groups, dtype=np.uint16)
        else:
            bits = CounterRng(derive_seed(seed, 0x4B, b)).bits(np.arange(cfg.n_groups), 0).astype(np.uint16)
        mask = (bits << np.uint16(b)).astype(np.uint16)[:, None]
        modified = peel(rk ^ mask, (rk_prime ^ mask) if cfg.symmetric else rk_prime)
        logger.info(f"KBST key bit {b}: base={base:.4f} modified={modified:.4f}")
        return base - modified

    drops = map_chunks(one_position, len(positions), workers=workers, chunk_size=1)
    values = np.full(16, np.nan)
    values[positions] = drops
    return SensitivityProfile(values, {
        "test": "kbst", "distinguisher": model.describe(), "cipher": cipher.cipher_id.value,
        "half_rxd": str(d), "format": str(spec), "rounds": distinguisher_rounds, "target_round": target_round,
        "type": cfg.mask_type.value, "symmetric": cfg.symmetric, "n_samples": cfg.n_groups, "seed": seed,
    })
