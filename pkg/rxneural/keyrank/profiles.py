"""Wrong key response profiles, single-key and joint over sensitive bits."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple
import csv
import json
import logging
import os
import struct

import numpy as np

from ..ciphers import Block, get_cipher, rol
from ..data import DataFormatSpec, HalfRxDifference, RxKeyPair, build_samples, generate_real_structure
from ..data.rng import map_chunks
from ..distinguisher import Distinguisher
from ..error import InvalidArgumentError, ProfileFileError, ProfileTooLargeError

logger = logging.getLogger(__name__)

MAX_JOINT_BITS = 26
MAGIC = b"RXWK"
VERSION = 1
# magic, version, kind (0 single, 1 joint), |sens_a|, |sens_b|, metadata length
HEADER = struct.Struct("<4sHBBBI")


def _check_bits(bits: Sequence[int], what: str) -> Tuple[int, ...]:
    bits = tuple(int(b) for b in bits)
    if any(not 0 <= b < 16 for b in bits) or len(set(bits)) != len(bits):
        raise InvalidArgumentError(f"{what} must be distinct bit positions in 0..15, got {list(bits)}")
    return tuple(sorted(bits))


def bit_mask(bits: Sequence[int]) -> int:
    return sum(1 << b for b in bits)


def expand_bits(values, bits: Sequence[int]) -> np.ndarray:
    """Scatter the low len(bits) bits of each value to the given positions."""
    values = np.asarray(values, dtype=np.uint32)
    out = np.zeros(values.shape, dtype=np.uint16)
    for i, b in enumerate(bits):
        out |= (((values >> i) & 1) << b).astype(np.uint16)
    return out


def project_bits(words, bits: Sequence[int]) -> np.ndarray:
    """Gather the given bit positions of each word into a compact integer."""
    words = np.asarray(words, dtype=np.uint32)
    out = np.zeros(words.shape, dtype=np.uint32)
    for i, b in enumerate(bits):
        out |= ((words >> b) & 1) << i
    return out


@dataclass
class WkrProfile:
    """Mean and deviation of the score after decrypting with (rk ^ delta, rk' ^ (delta <<< lam))."""
    mu: np.ndarray
    sigma: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.mu.shape != (1 << 16,) or self.sigma.shape != self.mu.shape:
            raise InvalidArgumentError(f"A single-key profile holds 2^16 entries, got {self.mu.shape}")
        if np.any(self.sigma < 0):
            raise InvalidArgumentError("Profile deviations must be non-negative")

    @property
    def space_bits(self) -> int:
        return 16


@dataclass
class JwkrProfile:
    """Response table over (delta_a, delta_b) projected onto the sensitive sets."""
    sens_a: Tuple[int, ...]
    sens_b: Tuple[int, ...]
    mu: np.ndarray
    sigma: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.sens_a = _check_bits(self.sens_a, "sens_a")
        self.sens_b = _check_bits(self.sens_b, "sens_b")
        shape = (1 << len(self.sens_a), 1 << len(self.sens_b))
        self.mu = np.asarray(self.mu, dtype=np.float64).reshape(shape)
        self.sigma = np.asarray(self.sigma, dtype=np.float64).reshape(shape)
        if np.any(self.sigma < 0):
            raise InvalidArgumentError("Profile deviations must be non-negative")

    @property
    def space_bits(self) -> int:
        return len(self.sens_a) + len(self.sens_b)

    @property
    def mask_a(self) -> int:
        return bit_mask(self.sens_a)

    @property
    def mask_b(self) -> int:
        return bit_mask(self.sens_b)


def _score_grid(model: Distinguisher, cipher, spec: DataFormatSpec, c, c_prime, keys, keys_prime) -> np.ndarray:
    """Scores of shape (q, n) after one-round decryption under q key pairs."""
    x = cipher.decrypt_round(Block(c.left[None], c.right[None]), keys)
    x_prime = cipher.decrypt_round(Block(c_prime.left[None], c_prime.right[None]), keys_prime)
    X = build_samples(cipher, spec, x, x_prime)
    q, n = X.shape[:2]
    return model.score_batch(X.reshape(q * n, -1)).reshape(q, n)


def wkr_profile(model: Distinguisher, cipher, d: HalfRxDifference, spec: DataFormatSpec, rounds: int,
                samples_per_delta: int, seed: int, workers: int = 1, key_pair: Optional[RxKeyPair] = None,
                chunk_size: int = 64) -> WkrProfile:
    """
    Wrong key response of an r-round distinguisher over every 16-bit delta.

    One set of real (r+1)-round samples is decrypted for each delta with
    (rk ^ delta, rk' ^ (delta <<< lam)) where rk, rk' are the true subkeys of
    round r+1; the scores' mean and deviation form the entry for delta.

    Args:
        model: r-round distinguisher
        cipher: Cipher name, id or instance
        d: Input half RX-difference
        spec: Data format of the distinguisher
        rounds: r
        samples_per_delta: Samples scored per delta
        seed: Seed of the sample set
        workers: Worker threads over delta chunks
        key_pair: Optional fixed related-key pair instead of fresh keys per sample
        chunk_size: Deltas per work item

    Returns:
        WkrProfile indexed by delta
    """
    if model.input_width != spec.width:
        raise InvalidArgumentError(f"Model width {model.input_width} does not match {spec}")
    cipher = get_cipher(cipher)
    s = generate_real_structure(cipher, spec, d, rounds + 1, samples_per_delta, seed, key_pair)
    rk, rk_prime = s.rk[rounds], s.rk_prime[rounds]

    def work(start: int, stop: int):
        delta = np.arange(start, stop, dtype=np.uint16)[:, None, None]
        scores = _score_grid(model, cipher, spec, s.c, s.c_prime, rk ^ delta, rk_prime ^ rol(delta, d.lam))
        logger.debug(f"WKR deltas {start}..{stop - 1} done")
        return scores.mean(axis=1), scores.std(axis=1)

    parts = map_chunks(work, 1 << 16, workers=workers, chunk_size=chunk_size)
    logger.info(f"WKR profile of {model.name} built over {samples_per_delta} samples per delta")
    return WkrProfile(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), {
        "distinguisher": model.describe(), "cipher": cipher.cipher_id.value, "half_rxd": str(d),
        "format": str(spec), "rounds": rounds, "round_index": rounds,
        "samples_per_delta": samples_per_delta, "seed": seed,
    })


def jwkr_profile(model: Distinguisher, cipher, d: HalfRxDifference, spec: DataFormatSpec, rounds: int,
                 sens_a: Sequence[int], sens_b: Sequence[int], samples_per_cell: int, seed: int, workers: int = 1,
                 key_pair: Optional[RxKeyPair] = None, zero_insensitive: bool = False,
                 chunk_size: int = 64) -> JwkrProfile:
    """
    Joint wrong key response over the sensitive subspaces of both subkeys.

    Cell (a, b) decrypts C with rk ^ expand(a) and C' with rk' ^ expand(b);
    with zero_insensitive the bits outside the sensitive sets are cleared
    first, which is how attack candidates are formed.

    Args:
        model: r-round distinguisher
        cipher: Cipher name, id or instance
        d: Input half RX-difference
        spec: Data format of the distinguisher
        rounds: r
        sens_a: Sensitive bits of the subkey used for C
        sens_b: Sensitive bits of the subkey used for C'
        samples_per_cell: Samples scored per cell
        seed: Seed of the sample set
        workers: Worker threads over cell chunks
        key_pair: Optional fixed related-key pair
        zero_insensitive: Clear insensitive subkey bits before applying a cell
        chunk_size: Cells per work item

    Returns:
        JwkrProfile of shape (2^|sens_a|, 2^|sens_b|)
    """
    sens_a = _check_bits(sens_a, "sens_a")
    sens_b = _check_bits(sens_b, "sens_b")
    if not sens_a or not sens_b:
        raise InvalidArgumentError("Both sensitive bit sets must be non-empty")
    if len(sens_a) + len(sens_b) > MAX_JOINT_BITS:
        raise ProfileTooLargeError(
            f"A joint profile over {len(sens_a) + len(sens_b)} bits exceeds the {MAX_JOINT_BITS}-bit limit"
        )
    if model.input_width != spec.width:
        raise InvalidArgumentError(f"Model width {model.input_width} does not match {spec}")
    cipher = get_cipher(cipher)
    s = generate_real_structure(cipher, spec, d, rounds + 1, samples_per_cell, seed, key_pair)
    rk, rk_prime = s.rk[rounds], s.rk_prime[rounds]
    if zero_insensitive:
        rk = rk & bit_mask(sens_a)
        rk_prime = rk_prime & bit_mask(sens_b)
    sb = len(sens_b)

    def work(start: int, stop: int):
        cells = np.arange(start, stop, dtype=np.uint32)
        da = expand_bits(cells >> sb, sens_a)[:, None, None]
        db = expand_bits(cells & ((1 << sb) - 1), sens_b)[:, None, None]
        scores = _score_grid(model, cipher, spec, s.c, s.c_prime, rk ^ da, rk_prime ^ db)
        return scores.mean(axis=1), scores.std(axis=1)

    n_cells = 1 << (len(sens_a) + sb)
    parts = map_chunks(work, n_cells, workers=workers, chunk_size=chunk_size)
    logger.info(f"JWKR profile of {model.name} built over {n_cells} cells")
    return JwkrProfile(sens_a, sens_b, np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), {
        "distinguisher": model.describe(), "cipher": cipher.cipher_id.value, "half_rxd": str(d),
        "format": str(spec), "rounds": rounds, "round_index": rounds,
        "samples_per_cell": samples_per_cell, "seed": seed, "zero_insensitive": zero_insensitive,
    })


def save_profile(profile, path: str) -> None:
    """
    Binary profile file: header, sensitive bit lists, JSON metadata, then mu
    and sigma as little-endian float64.
    """
    joint = isinstance(profile, JwkrProfile)
    sens_a = profile.sens_a if joint else ()
    sens_b = profile.sens_b if joint else ()
    meta = json.dumps(profile.metadata, sort_keys=True, default=str).encode("utf-8")
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, VERSION, int(joint), len(sens_a), len(sens_b), len(meta)))
        f.write(bytes(sens_a) + bytes(sens_b))
        f.write(meta)
        f.write(profile.mu.astype("<f8").tobytes())
        f.write(profile.sigma.astype("<f8").tobytes())


def load_profile(path: str):
    if not os.path.isfile(path):
        raise ProfileFileError("Profile file not found", path=path)
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < HEADER.size:
        raise ProfileFileError("Truncated profile header", path=path)
    magic, version, joint, sa, sb, meta_len = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ProfileFileError(f"Not a profile file (magic {magic!r})", path=path)
    if version != VERSION:
        raise ProfileFileError(f"Unsupported profile version {version}, expected {VERSION}", path=path)
    pos = HEADER.size
    sens_a, sens_b = tuple(raw[pos:pos + sa]), tuple(raw[pos + sa:pos + sa + sb])
    pos += sa + sb
    try:
        metadata = json.loads(raw[pos:pos + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProfileFileError(f"Corrupt profile metadata: {e}", path=path) from e
    pos += meta_len
    entries = (1 << (sa + sb)) if joint else (1 << 16)
    if len(raw) - pos != 16 * entries:
        raise ProfileFileError(f"Expected {entries} entries of mu and sigma", path=path)
    mu = np.frombuffer(raw, dtype="<f8", count=entries, offset=pos).astype(np.float64)
    sigma = np.frombuffer(raw, dtype="<f8", count=entries, offset=pos + 8 * entries).astype(np.float64)
    if joint:
        return JwkrProfile(sens_a, sens_b, mu, sigma, metadata)
    return WkrProfile(mu, sigma, metadata)


def write_profile_csv(profile, path: str) -> None:
    """
    delta,mu,sigma rows for single-key profiles; a,b,mu,sigma grids for joint ones.
    A profile carrying a config hash gets a leading "# config_hash=<hex>" line.
    """
    with open(path, "w", newline="") as f:
        if profile.metadata.get("config_hash"):
            f.write(f"# config_hash={profile.metadata['config_hash']}\n")
        writer = csv.writer(f)
        if isinstance(profile, JwkrProfile):
            writer.writerow(["a", "b", "mu", "sigma"])
            for a in range(profile.mu.shape[0]):
                for b in range(profile.mu.shape[1]):
                    writer.writerow([a, b, repr(float(profile.mu[a, b])), repr(float(profile.sigma[a, b]))])
        else:
            writer.writerow(["delta", "mu", "sigma"])
            for delta in range(profile.mu.size):
                writer.writerow([delta, repr(float(profile.mu[delta])), repr(float(profile.sigma[delta]))])
