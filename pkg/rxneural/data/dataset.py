from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple
import logging
import os
import struct

import numpy as np

from ..ciphers import Block, BlockCipher, CipherId, MasterKey, RoundKeys, get_cipher
from ..error import DatasetFileError, InvalidArgumentError
from .formats import (
    BaseFormat,
    DataFormatSpec,
    HalfRxDifference,
    RxKeyPair,
    build_samples,
    make_rx_plaintext_pair,
    words_to_bits,
)
from .rng import CounterRng, DEFAULT_CHUNK_SIZE, map_chunks

logger = logging.getLogger(__name__)

MAGIC = b"RXDS"
VERSION = 1
# magic, version, cipher, base, k, lambda, delta_r, rounds, n_samples, seed,
# n_real, n_random, negative mode, key relation, width, config hash
HEADER = struct.Struct("<4sHBBHBHHQQQQBBI32s")

# Stream lanes of the counter generator
_KEY_LANE = 0
_PT_LANE = 16
_RANDOM_BITS_LANE = 1 << 20


class NegativeMode(Enum):
    """How label-0 samples are produced"""
    RANDOM_PLAINTEXT = "random_plaintext"
    RANDOM_BITS = "random_bits"


class KeyRelation(Enum):
    ROTATIONAL = "rotational"


_CIPHER_CODES = {CipherId.SIMON32_64: 0, CipherId.SIMECK32_64: 1}
_NEGATIVE_CODES = {NegativeMode.RANDOM_PLAINTEXT: 0, NegativeMode.RANDOM_BITS: 1}
_RELATION_CODES = {KeyRelation.ROTATIONAL: 0}


def _decode(table: dict, code: int, what: str, path: str):
    for member, value in table.items():
        if value == code:
            return member
    raise DatasetFileError(f"Unknown {what} code {code}", path=path)


@dataclass
class Dataset:
    """Labelled samples; X holds one unpacked bit per column."""
    spec: DataFormatSpec
    cipher: CipherId
    half_rxd: HalfRxDifference
    X: np.ndarray
    y: np.ndarray
    seed: int
    negative_mode: NegativeMode = NegativeMode.RANDOM_PLAINTEXT
    key_relation: KeyRelation = KeyRelation.ROTATIONAL
    config_hash: bytes = bytes(32)
    # (C, C') words of shape (n, k); kept in memory only
    ciphertexts: Optional[Tuple[Block, Block]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != self.spec.width:
            raise InvalidArgumentError(f"Sample matrix shape {self.X.shape} does not match width {self.spec.width}")
        if self.y.shape != (self.X.shape[0],):
            raise InvalidArgumentError("One label per sample is required")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_real(self) -> int:
        return int(np.count_nonzero(self.y == 1))

    @property
    def n_random(self) -> int:
        return len(self) - self.n_real

    @property
    def width(self) -> int:
        return self.spec.width


def _check_rounds(rounds: int) -> None:
    if rounds < 1:
        raise InvalidArgumentError(f"rounds must be at least 1, got {rounds}")


def _encrypt_pair(cipher: BlockCipher, k: MasterKey, k_prime: MasterKey, p: Block, p_prime: Block,
                  rounds: int) -> Tuple[Block, Block]:
    rk = cipher.key_schedule(k, rounds)
    rk_prime = cipher.key_schedule(k_prime, rounds)
    return cipher.encrypt(p, rk), cipher.encrypt(p_prime, rk_prime)


def generate_pair_set(cipher, key_pair: RxKeyPair, d: HalfRxDifference, rounds: int, n_pairs: int,
                      seed: int) -> Tuple[Block, Block]:
    """
    Encrypt n_pairs plaintext pairs satisfying d under a fixed related-key pair.

    Args:
        cipher: Cipher name, id or instance
        key_pair: Related master keys
        d: Input half RX-difference
        rounds: Rounds of encryption, at least 1
        n_pairs: Number of pairs, may be 0
        seed: Seed of the plaintext stream

    Returns:
        (C, C') as blocks of uint16 vectors of length n_pairs
    """
    _check_rounds(rounds)
    cipher = get_cipher(cipher)
    rng = CounterRng(seed)
    idx = np.arange(n_pairs, dtype=np.uint64)
    p = Block(rng.words(idx, _PT_LANE), rng.words(idx, _PT_LANE + 1))
    return _encrypt_pair(cipher, key_pair.k, key_pair.k_prime, p, make_rx_plaintext_pair(p, d), rounds)


def _structure_chunk(cipher: BlockCipher, spec: DataFormatSpec, d: HalfRxDifference, rounds: int,
                     rng: CounterRng, labels: np.ndarray, start: int, stop: int,
                     key_pair: Optional[RxKeyPair]) -> Tuple[Block, Block]:
    """Ciphertext pairs of samples start..stop-1 as (count, k) word arrays."""
    idx = np.arange(start, stop, dtype=np.uint64)
    if key_pair is None:
        k = MasterKey(tuple(rng.words(idx, _KEY_LANE + j)[:, None] for j in range(4)))
        k_prime = k.rotated(d.lam)
    else:
        k, k_prime = key_pair.k, key_pair.k_prime
    pt_left = np.stack([rng.words(idx, _PT_LANE + 4 * j) for j in range(spec.k)], axis=1)
    pt_right = np.stack([rng.words(idx, _PT_LANE + 4 * j + 1) for j in range(spec.k)], axis=1)
    p = Block(pt_left, pt_right)
    related = make_rx_plaintext_pair(p, d)
    unrelated = Block(np.stack([rng.words(idx, _PT_LANE + 4 * j + 2) for j in range(spec.k)], axis=1),
                      np.stack([rng.words(idx, _PT_LANE + 4 * j + 3) for j in range(spec.k)], axis=1))
    real = (labels[start:stop] == 1)[:, None]
    p_prime = Block(np.where(real, related.left, unrelated.left).astype(np.uint16),
                    np.where(real, related.right, unrelated.right).astype(np.uint16))
    c, c_prime = _encrypt_pair(cipher, k, k_prime, p, p_prime, rounds)
    as16 = lambda b: Block(np.asarray(b.left, dtype=np.uint16), np.asarray(b.right, dtype=np.uint16))
    return as16(c), as16(c_prime)


def _random_bits(rng: CounterRng, spec: DataFormatSpec, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.uint64)
    n_words = spec.width // 16
    words = np.stack([rng.words(idx, _RANDOM_BITS_LANE + w) for w in range(n_words)], axis=1)
    return words_to_bits(words)


def balanced_labels(n_samples: int, seed: int) -> np.ndarray:
    """ceil(n/2) ones and floor(n/2) zeros in a seeded order."""
    y = np.zeros(n_samples, dtype=np.uint8)
    y[: (n_samples + 1) // 2] = 1
    return y[np.random.default_rng(seed).permutation(n_samples)]


def generate_dataset(cipher, spec: DataFormatSpec, d: HalfRxDifference, rounds: int, n_samples: int,
                     seed: int, negative_mode: NegativeMode = NegativeMode.RANDOM_PLAINTEXT,
                     key_pair: Optional[RxKeyPair] = None, workers: int = 1,
                     chunk_size: int = DEFAULT_CHUNK_SIZE) -> Dataset:
    """
    Generate a labelled dataset.

    Real samples hold spec.k pairs satisfying d under one fresh related-key pair
    per sample; random samples reuse the key pair with a uniform second
    plaintext, or are uniform bit strings in RANDOM_BITS mode.

    Args:
        cipher: Cipher name, id or instance
        spec: Data format of the samples
        d: Input half RX-difference; its rotation offset must match the data format
        rounds: Rounds of encryption
        n_samples: Number of samples, at least 1
        seed: Top-level seed
        negative_mode: Construction of label-0 samples
        key_pair: Optional fixed related-key pair shared by every sample
        workers: Worker threads
        chunk_size: Samples per work item

    Returns:
        The dataset, with its ciphertexts attached
    """
    _check_rounds(rounds)
    if n_samples < 1:
        raise InvalidArgumentError(f"A dataset needs at least 1 sample, got {n_samples}")
    if d.lam != spec.lam:
        raise InvalidArgumentError(f"Rotation offset of {d} does not match the data format ({spec.lam})")
    cipher = get_cipher(cipher)
    rng = CounterRng(seed)
    y = balanced_labels(n_samples, seed)

    def work(start: int, stop: int):
        c, c_prime = _structure_chunk(cipher, spec, d, rounds, rng, y, start, stop, key_pair)
        X = build_samples(cipher, spec, c, c_prime)
        if negative_mode is NegativeMode.RANDOM_BITS:
            fake = y[start:stop] == 0
            X[fake] = _random_bits(rng, spec, start, stop)[fake]
        return X, c, c_prime

    parts = map_chunks(work, n_samples, workers=workers, chunk_size=chunk_size)
    X = np.concatenate([p[0] for p in parts])
    c = Block(np.concatenate([p[1].left for p in parts]), np.concatenate([p[1].right for p in parts]))
    c_prime = Block(np.concatenate([p[2].left for p in parts]), np.concatenate([p[2].right for p in parts]))
    logger.info(f"Generated {n_samples} {spec} samples for {cipher.name} {d}, {rounds} rounds")
    return Dataset(spec=spec, cipher=cipher.cipher_id, half_rxd=d, X=X, y=y, seed=seed,
                   negative_mode=negative_mode, ciphertexts=(c, c_prime))


def save_dataset(dataset: Dataset, path: str, config_hash: Optional[bytes] = None) -> None:
    """
    Write a dataset file: a little-endian header followed by one record per
    sample (label byte, then the sample bits packed MSB-first).
    """
    digest = config_hash if config_hash is not None else dataset.config_hash
    if len(digest) != 32:
        raise InvalidArgumentError("The config hash must be 32 bytes")
    spec, d = dataset.spec, dataset.half_rxd
    header = HEADER.pack(
        MAGIC, VERSION, _CIPHER_CODES[dataset.cipher], spec.base.number, spec.k, d.lam, d.delta_r,
        spec.rounds, len(dataset), dataset.seed & 0xFFFFFFFFFFFFFFFF, dataset.n_real, dataset.n_random,
        _NEGATIVE_CODES[dataset.negative_mode], _RELATION_CODES[dataset.key_relation], spec.width, digest,
    )
    records = np.concatenate([dataset.y[:, None].astype(np.uint8), np.packbits(dataset.X, axis=1)], axis=1)
    with open(path, "wb") as f:
        f.write(header)
        f.write(records.tobytes())
    logger.info(f"Wrote {len(dataset)} samples to {path}")


def load_dataset(path: str) -> Dataset:
    """Read a dataset file written by save_dataset."""
    if not os.path.isfile(path):
        raise DatasetFileError("Dataset file not found", path=path)
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < HEADER.size:
        raise DatasetFileError("Truncated dataset header", path=path)
    (magic, version, cipher_code, base, k, lam, delta_r, rounds, n, seed, n_real, n_random,
     neg_code, rel_code, width, digest) = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DatasetFileError(f"Not a dataset file (magic {magic!r})", path=path)
    if version != VERSION:
        raise DatasetFileError(f"Unsupported dataset version {version}, expected {VERSION}", path=path)
    try:
        spec = DataFormatSpec(BaseFormat.parse(base), k, lam, rounds)
        d = HalfRxDifference(lam, delta_r)
    except InvalidArgumentError as e:
        raise DatasetFileError(f"Corrupt dataset header: {e}", path=path) from e
    if spec.width != width:
        raise DatasetFileError(f"Header width {width} does not match {spec}", path=path)
    record = 1 + (width + 7) // 8
    body = np.frombuffer(raw, dtype=np.uint8, offset=HEADER.size)
    if body.size != n * record:
        raise DatasetFileError(f"Expected {n} records of {record} bytes, found {body.size} bytes", path=path)
    body = body.reshape(n, record)
    y = body[:, 0].copy()
    X = np.unpackbits(body[:, 1:], axis=1, count=width)
    if int(np.count_nonzero(y == 1)) != n_real or n - n_real != n_random:
        raise DatasetFileError("Label counts do not match the header", path=path)
    return Dataset(
        spec=spec, cipher=_decode(_CIPHER_CODES, cipher_code, "cipher", path), half_rxd=d, X=X, y=y,
        seed=seed, negative_mode=_decode(_NEGATIVE_CODES, neg_code, "negative mode", path),
        key_relation=_decode(_RELATION_CODES, rel_code, "key relation", path), config_hash=digest,
    )


@dataclass
class PairStructure:
    """Real ciphertext pairs with the subkeys that produced them."""
    c: Block
    c_prime: Block
    rk: RoundKeys
    rk_prime: RoundKeys
    key_pair: Optional[RxKeyPair] = None

    def __len__(self) -> int:
        return int(np.asarray(self.c.left).shape[0])


def generate_real_structure(cipher, spec: DataFormatSpec, d: HalfRxDifference, rounds: int, n_samples: int,
                            seed: int, key_pair: Optional[RxKeyPair] = None) -> PairStructure:
    """
    n_samples groups of spec.k real pairs. Without a fixed key pair every
    group has its own related keys and the subkey words have shape (n, 1).
    """
    _check_rounds(rounds)
    if n_samples < 1:
        raise InvalidArgumentError(f"At least one sample is required, got {n_samples}")
    cipher = get_cipher(cipher)
    rng = CounterRng(seed)
    labels = np.ones(n_samples, dtype=np.uint8)
    c, c_prime = _structure_chunk(cipher, spec, d, rounds, rng, labels, 0, n_samples, key_pair)
    if key_pair is None:
        idx = np.arange(n_samples, dtype=np.uint64)
        k = MasterKey(tuple(rng.words(idx, _KEY_LANE + j)[:, None] for j in range(4)))
        k_prime = k.rotated(d.lam)
    else:
        k, k_prime = key_pair.k, key_pair.k_prime
    return PairStructure(c, c_prime, cipher.key_schedule(k, rounds), cipher.key_schedule(k_prime, rounds), key_pair)
