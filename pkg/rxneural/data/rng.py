"""Counter-based random streams and the deterministic chunked worker pool."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar, Union
import logging

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar('T')

DEFAULT_CHUNK_SIZE = 4096

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_LANE = np.uint64(0xD6E8FEB86659FD93)


def splitmix64(x: np.ndarray) -> np.ndarray:
    """The splitmix64 finaliser applied elementwise to uint64 values."""
    with np.errstate(over='ignore'):
        z = np.asarray(x, dtype=np.uint64) + _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *tags: int) -> int:
    """Mix integer tags into a seed, giving an independent 64-bit sub-seed."""
    h = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    for tag in tags:
        h = splitmix64(h ^ splitmix64(np.uint64(tag & 0xFFFFFFFFFFFFFFFF)))
    return int(h)


class CounterRng:
    """
    Stateless generator: the value for (sample index, lane) is a hash of the
    seed and both counters, so any subset of samples can be produced in any
    order, by any number of workers, with identical results.
    """

    def __init__(self, seed: int):
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        self._key = splitmix64(np.uint64(self.seed))

    def raw(self, indices: Union[np.ndarray, Sequence[int]], lane: int) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.uint64)
        with np.errstate(over='ignore'):
            h = splitmix64(self._key ^ (idx * _GAMMA))
            return splitmix64(h ^ (np.uint64(lane) * _LANE))

    def words(self, indices, lane: int) -> np.ndarray:
        """Uniform 16-bit words, one per index."""
        return (self.raw(indices, lane) >> np.uint64(48)).astype(np.uint16)

    def bits(self, indices, lane: int) -> np.ndarray:
        """Uniform bits in {0, 1} as uint8."""
        return (self.raw(indices, lane) >> np.uint64(63)).astype(np.uint8)

    def uniform(self, indices, lane: int) -> np.ndarray:
        """Uniform doubles in [0, 1)."""
        return (self.raw(indices, lane) >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def chunk_bounds(n: int, chunk_size: int = DEFAULT_CHUNK_SIZE) -> List[tuple]:
    return [(start, min(start + chunk_size, n)) for start in range(0, n, chunk_size)]


def map_chunks(fn: Callable[[int, int], T], n: int, workers: int = 1,
               chunk_size: int = DEFAULT_CHUNK_SIZE) -> List[T]:
    """
    Apply fn(start, stop) over fixed-size index chunks of range(n).

    Chunk boundaries depend only on n and chunk_size, and results come back in
    chunk order, so the output does not depend on the worker count.

    Args:
        fn: Work function over a half-open index range
        n: Number of items
        workers: Thread count; 1 runs inline
        chunk_size: Items per chunk

    Returns:
        Results of fn, one per chunk, in index order
    """
    bounds = chunk_bounds(n, chunk_size)
    if workers <= 1 or len(bounds) <= 1:
        return [fn(start, stop) for start, stop in bounds]
    logger.debug(f"Dispatching {len(bounds)} chunks to {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(fn, start, stop) for start, stop in bounds]
        return [f.result() for f in futures]
