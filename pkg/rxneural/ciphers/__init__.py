from typing import Union

from .base import (
    MASK,
    WORD_SIZE,
    Block,
    BlockCipher,
    CipherId,
    MasterKey,
    RoundKeys,
    Words,
    as_words,
    hamming_weight,
    rol,
    ror,
)
from .simeck import Simeck32
from .simon import Simon32

_CIPHERS = {
    CipherId.SIMON32_64: Simon32,
    CipherId.SIMECK32_64: Simeck32,
}


def get_cipher(cipher: Union[str, CipherId, BlockCipher]) -> BlockCipher:
    """Resolve a cipher name, id or instance to a cipher instance."""
    if isinstance(cipher, BlockCipher):
        return cipher
    return _CIPHERS[CipherId.parse(cipher)]()


def round_fn(cipher: Union[str, CipherId, BlockCipher], x: Words) -> Words:
    return get_cipher(cipher).round_fn(x)


__all__ = [
    "MASK",
    "WORD_SIZE",
    "Block",
    "BlockCipher",
    "CipherId",
    "MasterKey",
    "RoundKeys",
    "Simeck32",
    "Simon32",
    "Words",
    "as_words",
    "get_cipher",
    "hamming_weight",
    "rol",
    "ror",
    "round_fn",
]
