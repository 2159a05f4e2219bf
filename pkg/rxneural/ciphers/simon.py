from typing import List, Optional
import logging

import numpy as np

from .base import BlockCipher, CipherId, MasterKey, Words, rol, ror

# Simon32/64 uses the z0 sequence of the Simon/Speck design document,
# period 62, bit j of the sequence is bit j (LSB first) of this literal.
Z0 = 0b01100111000011010100100010111110110011100001101010010001011111
Z_PERIOD = 62
ROUND_CONSTANT = 0xFFFC


def z_bit(i: int) -> int:
    return (Z0 >> (i % Z_PERIOD)) & 1


class Simon32(BlockCipher):
    """Simon32/64 with a four-word master key."""

    cipher_id = CipherId.SIMON32_64

    def __init__(self, logger: Optional[logging.Logger] = None):
        super().__init__("Simon32/64", logger)
        self._offset_cache = {}

    def round_fn(self, x: Words) -> Words:
        return (rol(x, 1) & rol(x, 8)) ^ rol(x, 2)

    def _expand(self, schedule_words: List[Words], rounds: int) -> List[Words]:
        ks = list(schedule_words)
        for i in range(4, rounds):
            tmp = ror(ks[i - 1], 3) ^ ks[i - 3]
            tmp = tmp ^ ror(tmp, 1)
            ks.append(ks[i - 4] ^ tmp ^ z_bit(i - 4) ^ ROUND_CONSTANT)
        return ks

    def subkey_rx_offsets(self, rounds: int, lam: int) -> List[int]:
        """
        Per-round subkey RX-differences rk'_i ^ (rk_i <<< lam) for K' = K <<< lam.

        The schedule is linear up to its constants, so the offsets only depend on
        the constants and equal c_i ^ (c_i <<< lam) with c the all-zero-key schedule.

        Args:
            rounds: Number of rounds
            lam: Rotation offset of the related-key pair

        Returns:
            One offset per round
        """
        key = (rounds, lam % 16)
        if key not in self._offset_cache:
            zero = self.key_schedule(MasterKey((0, 0, 0, 0)), rounds)
            self._offset_cache[key] = [int(c) ^ rol(int(c), lam) for c in zero.keys]
        return list(self._offset_cache[key])

    def companion_subkey(self, guess: Words, round_index: int, lam: int) -> Words:
        offset = self.subkey_rx_offsets(round_index + 1, lam)[round_index]
        if isinstance(guess, np.ndarray):
            return (rol(guess, lam) ^ np.uint16(offset)).astype(np.uint16)
        return rol(int(guess), lam) ^ offset
