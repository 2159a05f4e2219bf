from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from ..error import InvalidArgumentError

WORD_SIZE = 16
MASK = (1 << WORD_SIZE) - 1

# A word is a 16-bit value held either as a Python int or as a numpy uint16
# vector (one entry per sample). Every kernel below accepts both.
Words = Union[int, np.ndarray]


def rol(x: Words, k: int) -> Words:
    """Circular left shift of a 16-bit word."""
    k %= WORD_SIZE
    if k == 0:
        return x
    return ((x << k) & MASK) | (x >> (WORD_SIZE - k))


def ror(x: Words, k: int) -> Words:
    """Circular right shift of a 16-bit word."""
    k %= WORD_SIZE
    if k == 0:
        return x
    return (x >> k) | ((x << (WORD_SIZE - k)) & MASK)


def as_words(values) -> np.ndarray:
    """Coerce ints or sequences to a uint16 vector."""
    return np.asarray(values, dtype=np.uint64).astype(np.uint16)


def hamming_weight(v: Words) -> Words:
    """Hamming weight of 16-bit words."""
    if isinstance(v, np.ndarray):
        res = np.zeros(v.shape, dtype=np.uint8)
        for i in range(WORD_SIZE):
            res = res + ((v >> i) & 1).astype(np.uint8)
        return res
    return bin(int(v) & MASK).count("1")


class CipherId(Enum):
    """Supported ciphers"""
    SIMON32_64 = "simon"
    SIMECK32_64 = "simeck"

    @classmethod
    def parse(cls, value: Union[str, "CipherId"]) -> "CipherId":
        if isinstance(value, CipherId):
            return value
        name = str(value).strip().lower().replace("/", "").replace("_", "")
        match name:
            case "simon" | "simon3264":
                return cls.SIMON32_64
            case "simeck" | "simeck3264":
                return cls.SIMECK32_64
            case _:
                raise InvalidArgumentError(f"Unknown cipher: {value}")


@dataclass(frozen=True)
class Block:
    """A 32-bit state as two 16-bit branches; left is the high half when packed."""
    left: Words
    right: Words

    def pack(self) -> Words:
        if isinstance(self.left, np.ndarray) or isinstance(self.right, np.ndarray):
            return (np.asarray(self.left, dtype=np.uint32) << 16) | np.asarray(self.right, dtype=np.uint32)
        return ((int(self.left) & MASK) << 16) | (int(self.right) & MASK)

    @classmethod
    def unpack(cls, value: Words) -> "Block":
        if isinstance(value, np.ndarray):
            value = value.astype(np.uint32)
            return cls((value >> 16).astype(np.uint16), (value & MASK).astype(np.uint16))
        return cls((int(value) >> 16) & MASK, int(value) & MASK)

    def rotated(self, lam: int) -> "Block":
        """Branchwise rotation by lam."""
        return Block(rol(self.left, lam), rol(self.right, lam))

    def __eq__(self, other):
        if not isinstance(other, Block):
            return NotImplemented
        return bool(np.all(np.asarray(self.left) == np.asarray(other.left))
                    and np.all(np.asarray(self.right) == np.asarray(other.right)))

    def __hash__(self):
        return hash((np.asarray(self.left).tobytes(), np.asarray(self.right).tobytes()))


@dataclass(frozen=True)
class MasterKey:
    """Four 16-bit key words in design-document order (k3, k2, k1, k0)."""
    words: Tuple[Words, Words, Words, Words]

    def __post_init__(self):
        if len(self.words) != 4:
            raise InvalidArgumentError(f"A master key has exactly 4 words, got {len(self.words)}")
        object.__setattr__(self, "words", tuple(self.words))

    def rotated(self, lam: int) -> "MasterKey":
        """Each key word rotated left by lam."""
        return MasterKey(tuple(rol(w, lam) for w in self.words))

    def __eq__(self, other):
        if not isinstance(other, MasterKey):
            return NotImplemented
        return all(np.all(np.asarray(a) == np.asarray(b)) for a, b in zip(self.words, other.words))

    def __hash__(self):
        return hash(tuple(np.asarray(w).tobytes() for w in self.words))


@dataclass(frozen=True)
class RoundKeys:
    """Expanded subkeys; keys[i] is the subkey of round i."""
    cipher: CipherId
    keys: Tuple[Words, ...]

    def __len__(self) -> int:
        return len(self.keys)

    def __getitem__(self, index):
        return self.keys[index]

    def truncated(self, rounds: int) -> "RoundKeys":
        return RoundKeys(self.cipher, tuple(self.keys[:rounds]))


class BlockCipher(ABC):
    """
    Abstract base class for the 32-bit Feistel ciphers of the Simon family.

     Subclasses supply the round function and the key schedule; the Feistel
     skeleton, decryption and zero-key partial decryption live here.
    """

    cipher_id: CipherId

    def __init__(self, name: str, logger: Optional[logging.Logger] = None):
        """
        Initializes the cipher

        Args:
            name: Display name of the cipher
            logger: Optional logger instance
        """
        self.name = name
        self.logger = logger or logging.getLogger(self.__class__.__name__)

    @abstractmethod
    def round_fn(self, x: Words) -> Words:
        """
        The nonlinear round function f.

        Args:
            x: Left branch word(s)

        Returns:
            f(x)
        """
        raise NotImplementedError("Subclasses should implement the round function")

    @abstractmethod
    def _expand(self, schedule_words: List[Words], rounds: int) -> List[Words]:
        """
        Expand the first four subkeys (schedule order) to `rounds` subkeys.

        Args:
            schedule_words: [rk0, rk1, rk2, rk3]
            rounds: Number of subkeys wanted (at least 4)

        Returns:
            List of subkeys
        """
        raise NotImplementedError("Subclasses should implement the key schedule")

    def key_schedule(self, mk: MasterKey, rounds: int) -> RoundKeys:
        """
        Expand a master key.

        Args:
            mk: Master key, words in design-document order
            rounds: Number of subkeys, at least 1

        Returns:
            RoundKeys whose first four entries are the master key words in schedule order
        """
        if rounds < 1:
            raise InvalidArgumentError(f"Key schedule needs at least one round, got {rounds}")
        schedule_words = list(reversed(mk.words))
        keys = self._expand(schedule_words, max(rounds, 4))
        return RoundKeys(self.cipher_id, tuple(keys[:rounds]))

    def encrypt_round(self, block: Block, k: Words) -> Block:
        """One Feistel round: (L, R) -> (R ^ f(L) ^ k, L)."""
        return Block(block.right ^ self.round_fn(block.left) ^ k, block.left)

    def decrypt_round(self, block: Block, k: Words) -> Block:
        """Inverse of one round: (L', R') -> (R', L' ^ f(R') ^ k)."""
        return Block(block.right, block.left ^ self.round_fn(block.right) ^ k)

    def encrypt(self, pt: Block, rk: Union[RoundKeys, Sequence[Words]], rounds: Optional[int] = None) -> Block:
        """
        Encrypt with the given subkeys.

        Args:
            pt: Plaintext block(s)
            rk: Subkeys; an empty sequence encrypts zero rounds
            rounds: Optional number of rounds, defaults to len(rk)

        Returns:
            Ciphertext block(s)
        """
        keys = self._keys(rk, rounds)
        state = pt
        for k in keys:
            state = self.encrypt_round(state, k)
        return state

    def encrypt_trace(self, pt: Block, rk: Union[RoundKeys, Sequence[Words]]) -> List[Block]:
        """Encrypt and return every intermediate state, plaintext first."""
        states = [pt]
        for k in self._keys(rk, None):
            states.append(self.encrypt_round(states[-1], k))
        return states

    def decrypt(self, ct: Block, rk: Union[RoundKeys, Sequence[Words]], rounds: Optional[int] = None) -> Block:
        """
        Decrypt with the given subkeys; exact inverse of encrypt.

        Args:
            ct: Ciphertext block(s)
            rk: Subkeys used for encryption
            rounds: Optional number of rounds, defaults to len(rk)

        Returns:
            Plaintext block(s)
        """
        keys = self._keys(rk, rounds)
        state = ct
        for k in reversed(keys):
            state = self.decrypt_round(state, k)
        return state

    def partial_decrypt_zero_key(self, ct: Block, rounds: int) -> Block:
        """
        Peel one or two rounds with all-zero subkeys.

        Args:
            ct: Ciphertext block(s)
            rounds: 1 or 2

        Returns:
            The partially decrypted block(s)
        """
        if rounds not in (1, 2):
            raise InvalidArgumentError(f"Zero-key partial decryption supports 1 or 2 rounds, got {rounds}")
        state = ct
        for _ in range(rounds):
            state = self.decrypt_round(state, 0)
        return state

    def companion_subkey(self, guess: Words, round_index: int, lam: int) -> Words:
        """
        The related subkey implied by a guess of the first subkey of a round.

        Args:
            guess: Guessed subkey(s) of the first cipher instance
            round_index: Round the subkey belongs to
            lam: Rotation offset of the related-key pair

        Returns:
            The subkey the second instance uses in that round
        """
        raise InvalidArgumentError(
            f"{self.name} subkey RX-differences are key dependent; guess both subkeys jointly"
        )

    def _keys(self, rk: Union[RoundKeys, Sequence[Words]], rounds: Optional[int]) -> Sequence[Words]:
        keys = rk.keys if isinstance(rk, RoundKeys) else tuple(rk)
        if rounds is None:
            return keys
        if rounds < 0 or rounds > len(keys):
            raise InvalidArgumentError(f"Cannot run {rounds} rounds with {len(keys)} subkeys")
        return keys[:rounds]

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name='{self.name}')"
