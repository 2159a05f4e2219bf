from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from ..ciphers import Block, BlockCipher, MasterKey, WORD_SIZE, Words, rol, ror
from ..error import InvalidArgumentError

# Component keys, in the order they can appear inside a pair's block of bits.
DL_R = "dl_r"      # (C_L <<< lam) ^ C'_L
DR_R = "dr_r"      # (C_R <<< lam) ^ C'_R
CL_ROT = "cl_rot"  # C_L <<< lam
CR_ROT = "cr_rot"  # C_R <<< lam
CL_P = "cl_p"      # C'_L
CR_P = "cr_p"      # C'_R
DR_R1 = "dr_r1"    # right-branch RX-difference after one zero-key decryption round
DR_R2 = "dr_r2"    # right-branch RX-difference after two zero-key decryption rounds

_BIT_SHIFTS = np.arange(WORD_SIZE - 1, -1, -1, dtype=np.uint16)


def _check_lambda(lam: int) -> None:
    if not 1 <= lam <= 15:
        raise InvalidArgumentError(f"Rotation offset must be in 1..15, got {lam}")


@dataclass(frozen=True)
class HalfRxDifference:
    """Input RX-difference with a zero left branch."""
    lam: int
    delta_r: int

    def __post_init__(self):
        _check_lambda(self.lam)
        if not 0 <= self.delta_r <= 0xFFFF:
            raise InvalidArgumentError(f"Right-branch difference must be a 16-bit word, got {self.delta_r}")

    @classmethod
    def parse(cls, text: str) -> "HalfRxDifference":
        """Parse "[15, 0x3]", "15,0x3" or "15:3"."""
        parts = text.strip().strip("[]").replace(":", ",").split(",")
        if len(parts) != 2:
            raise InvalidArgumentError(f"Cannot parse half RX-difference '{text}'")
        try:
            return cls(int(parts[0], 0), int(parts[1].strip(), 16))
        except ValueError as e:
            raise InvalidArgumentError(f"Cannot parse half RX-difference '{text}'") from e

    def __str__(self) -> str:
        return f"[{self.lam}, {self.delta_r:#x}]"


@dataclass(frozen=True)
class RxKeyPair:
    """Related master keys K and K' = K with every word rotated left by lam."""
    k: MasterKey
    k_prime: MasterKey
    lam: int

    def __post_init__(self):
        _check_lambda(self.lam)
        if self.k.rotated(self.lam) != self.k_prime:
            raise InvalidArgumentError("k_prime must equal k with every word rotated by lambda")

    @classmethod
    def related(cls, k: MasterKey, lam: int) -> "RxKeyPair":
        return cls(k, k.rotated(lam), lam)


def rx_difference(x: Block, x_prime: Block, lam: int) -> Tuple[Words, Words]:
    """Branchwise RX-difference ((x_L <<< lam) ^ x'_L, (x_R <<< lam) ^ x'_R)."""
    _check_lambda(lam)
    return rol(x.left, lam) ^ x_prime.left, rol(x.right, lam) ^ x_prime.right


def make_rx_plaintext_pair(p: Block, d: HalfRxDifference) -> Block:
    """The partner plaintext p' with RX-difference (0, delta_r) to p."""
    return Block(rol(p.left, d.lam), rol(p.right, d.lam) ^ d.delta_r)


def enumerate_half_rxd(max_hw: int) -> List[HalfRxDifference]:
    """
    All half RX-differences with 1 <= hw(delta_r) <= max_hw, lambda ascending
    then delta_r ascending.
    """
    if max_hw not in (1, 2):
        raise InvalidArgumentError(f"max_hw must be 1 or 2, got {max_hw}")
    deltas = set()
    for hw in range(1, max_hw + 1):
        for bits in combinations(range(WORD_SIZE), hw):
            deltas.add(sum(1 << b for b in bits))
    return [HalfRxDifference(lam, delta) for lam in range(1, 16) for delta in sorted(deltas)]


class BaseFormat(Enum):
    """Per-pair component lists of the data formats."""
    D1 = (DL_R, DR_R, CL_ROT, CR_ROT, CL_P, CR_P, DR_R1, DR_R2)
    D2 = (CL_ROT, CR_ROT, CL_P, CR_P)
    D3 = (DR_R, CR_ROT, CR_P, DR_R1, DR_R2)
    D4 = (CR_ROT, CR_P)
    D5 = (DR_R, DR_R1, DR_R2)
    D6 = (DR_R1, DR_R2)
    D7 = (DR_R, DR_R1)
    D8 = (DR_R, DR_R2)

    @property
    def components(self) -> Tuple[str, ...]:
        return self.value

    @property
    def number(self) -> int:
        return int(self.name[1:])

    @classmethod
    def parse(cls, value: Union[str, int, "BaseFormat"]) -> "BaseFormat":
        if isinstance(value, BaseFormat):
            return value
        name = f"D{value}" if isinstance(value, int) else str(value).upper()
        try:
            return cls[name]
        except KeyError:
            raise InvalidArgumentError(f"Unknown data format: {value}")

    @property
    def carries_ciphertexts(self) -> bool:
        return all(c in self.value for c in (CL_ROT, CR_ROT, CL_P, CR_P))


@dataclass(frozen=True)
class DataFormatSpec:
    """A base format extended to k ciphertext pairs per sample."""
    base: BaseFormat
    k: int
    lam: int
    rounds: int

    def __post_init__(self):
        object.__setattr__(self, "base", BaseFormat.parse(self.base))
        if self.k < 1:
            raise InvalidArgumentError(f"pairs_per_sample must be at least 1, got {self.k}")
        _check_lambda(self.lam)

    @property
    def components(self) -> Tuple[str, ...]:
        return self.base.components

    @property
    def pair_width(self) -> int:
        return WORD_SIZE * len(self.components)

    @property
    def width(self) -> int:
        return self.pair_width * self.k

    def bit_offset(self, component: str, pair: int = 0) -> int:
        """First bit of a component inside a sample."""
        if component not in self.components:
            raise InvalidArgumentError(f"{self.base.name} has no component '{component}'")
        if not 0 <= pair < self.k:
            raise InvalidArgumentError(f"Pair index {pair} outside 0..{self.k - 1}")
        return pair * self.pair_width + self.components.index(component) * WORD_SIZE

    def positions_of(self, other: "DataFormatSpec") -> np.ndarray:
        """Bit positions of this spec's sample inside a sample of `other` built from the same pairs."""
        positions = []
        for pair in range(self.k):
            for component in self.components:
                start = other.bit_offset(component, pair)
                positions.extend(range(start, start + WORD_SIZE))
        return np.asarray(positions, dtype=np.int64)

    def __str__(self) -> str:
        suffix = f"^{self.k}" if self.k > 1 else ""
        return f"{self.base.name}{suffix}"


def words_to_bits(words: np.ndarray) -> np.ndarray:
    """Expand uint16 words (..., w) to MSB-first bits (..., w * 16)."""
    words = np.asarray(words, dtype=np.uint16)
    bits = ((words[..., None] >> _BIT_SHIFTS) & 1).astype(np.uint8)
    return bits.reshape(words.shape[:-1] + (words.shape[-1] * WORD_SIZE,))


def bits_to_words(bits: np.ndarray) -> np.ndarray:
    """Inverse of words_to_bits."""
    bits = np.asarray(bits, dtype=np.uint16)
    shaped = bits.reshape(bits.shape[:-1] + (bits.shape[-1] // WORD_SIZE, WORD_SIZE))
    return (shaped << _BIT_SHIFTS).sum(axis=-1, dtype=np.uint32).astype(np.uint16)


def compute_components(cipher: BlockCipher, c: Block, c_prime: Block, lam: int,
                       wanted: Sequence[str]) -> Dict[str, np.ndarray]:
    """Compute the requested components from ciphertext words of any shape."""
    # One-round decryption under an array of keys only widens the right half
    left, right, left_p, right_p = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.uint16) for v in (c.left, c.right, c_prime.left, c_prime.right)))
    c, c_prime = Block(left, right), Block(left_p, right_p)
    out = {}
    if DL_R in wanted or DR_R in wanted:
        dl, dr = rx_difference(c, c_prime, lam)
        out[DL_R], out[DR_R] = dl, dr
    if CL_ROT in wanted:
        out[CL_ROT] = rol(c.left, lam)
    if CR_ROT in wanted:
        out[CR_ROT] = rol(c.right, lam)
    out[CL_P] = c_prime.left
    out[CR_P] = c_prime.right
    if DR_R1 in wanted:
        s = cipher.partial_decrypt_zero_key(c, 1)
        sp = cipher.partial_decrypt_zero_key(c_prime, 1)
        out[DR_R1] = rx_difference(s, sp, lam)[1]
    if DR_R2 in wanted:
        s = cipher.partial_decrypt_zero_key(c, 2)
        sp = cipher.partial_decrypt_zero_key(c_prime, 2)
        out[DR_R2] = rx_difference(s, sp, lam)[1]
    return out


def build_samples(cipher: BlockCipher, spec: DataFormatSpec, c: Block, c_prime: Block) -> np.ndarray:
    """
    Build sample bits from ciphertext pairs.

    Args:
        cipher: Cipher used for the zero-key decryption components
        spec: Data format
        c: Ciphertexts of the first key, words of shape (..., k)
        c_prime: Ciphertexts of the related key, same shape

    Returns:
        uint8 bit matrix of shape (..., spec.width); pairs are concatenated in
        order and components follow the format's listed order
    """
    left = np.asarray(c.left)
    if left.ndim == 0 or left.shape[-1] != spec.k:
        raise InvalidArgumentError(f"{spec} expects {spec.k} ciphertext pairs per sample")
    comps = compute_components(cipher, c, c_prime, spec.lam, spec.components)
    words = np.stack([comps[name] for name in spec.components], axis=-1)
    return words_to_bits(words.reshape(words.shape[:-2] + (spec.k * len(spec.components),)))


def build_sample(cipher: BlockCipher, spec: DataFormatSpec, ct_pairs: Sequence[Tuple[Block, Block]]) -> np.ndarray:
    """Bits of a single sample from its k ciphertext pairs."""
    if len(ct_pairs) != spec.k:
        raise InvalidArgumentError(f"{spec} expects {spec.k} ciphertext pairs, got {len(ct_pairs)}")
    c = Block(np.asarray([int(p[0].left) for p in ct_pairs], dtype=np.uint16),
              np.asarray([int(p[0].right) for p in ct_pairs], dtype=np.uint16))
    cp = Block(np.asarray([int(p[1].left) for p in ct_pairs], dtype=np.uint16),
               np.asarray([int(p[1].right) for p in ct_pairs], dtype=np.uint16))
    return build_samples(cipher, spec, c, cp)


def decode_ciphertexts(spec: DataFormatSpec, X: np.ndarray) -> Tuple[Block, Block]:
    """Recover (C, C') of shape (n, k) from samples of a format that carries both ciphertexts."""
    if not spec.base.carries_ciphertexts:
        raise InvalidArgumentError(f"{spec.base.name} does not carry full ciphertexts")
    words = bits_to_words(np.asarray(X)).reshape(X.shape[0], spec.k, len(spec.components))
    idx = {name: i for i, name in enumerate(spec.components)}
    c = Block(ror(words[..., idx[CL_ROT]], spec.lam), ror(words[..., idx[CR_ROT]], spec.lam))
    cp = Block(words[..., idx[CL_P]], words[..., idx[CR_P]])
    return c, cp
