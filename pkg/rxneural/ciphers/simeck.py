from typing import List, Optional
import logging

from .base import BlockCipher, CipherId, Words, rol

# Simeck32/64 round constants: the m-sequence of period 31 from the Simeck
# design document, listed in round order (z_0 first).
Z_SEQUENCE = "1111100011011101010000100101100"
ROUND_CONSTANT = 0xFFFC


def z_bit(i: int) -> int:
    return int(Z_SEQUENCE[i % len(Z_SEQUENCE)])


class Simeck32(BlockCipher):
    """Simeck32/64; the key schedule reuses the round function on a four-word register."""

    cipher_id = CipherId.SIMECK32_64

    def __init__(self, logger: Optional[logging.Logger] = None):
        super().__init__("Simeck32/64", logger)

    def round_fn(self, x: Words) -> Words:
        return (x & rol(x, 5)) ^ rol(x, 1)

    def _expand(self, schedule_words: List[Words], rounds: int) -> List[Words]:
        # register (k_i, t_i, t_{i+1}, t_{i+2}); k_{i+1} = t_i
        ks = [schedule_words[0]]
        t = list(schedule_words[1:])
        for i in range(rounds - 1):
            t.append(ks[i] ^ self.round_fn(t[i]) ^ ROUND_CONSTANT ^ z_bit(i))
            ks.append(t[i])
        return ks
