from abc import ABC, abstractmethod
from typing import Any, Dict, Optional
import logging
import threading
import time

import numpy as np

from ..error import InvalidArgumentError


class Distinguisher(ABC):
    """
    Abstract base class for sample scorers.

     A distinguisher maps a sample's bits to a confidence in (0, 1) that the
     sample is real. Subclasses implement batch scoring; width checks and
     statistics live here.
    """

    def __init__(self, input_width: int, name: str, logger: Optional[logging.Logger] = None):
        """
        Initializes the distinguisher

        Args:
            input_width: Number of input bits
            name: Display name
            logger: Optional logger instance
        """
        if input_width < 1:
            raise InvalidArgumentError(f"input_width must be positive, got {input_width}")
        self.input_width = input_width
        self.name = name
        self.logger = logger or logging.getLogger(self.__class__.__name__)
        self.statistics = {
            'batches_scored': 0,
            'samples_scored': 0,
            'last_reset': time.strftime('%Y-%m-%d %H:%M:%S', time.localtime(time.time())),
        }
        self._lock = threading.RLock()

    @abstractmethod
    def _score(self, X: np.ndarray) -> np.ndarray:
        """
        Score a validated batch.

        Args:
            X: Bits of shape (n, input_width)

        Returns:
            float64 scores of shape (n,)
        """
        raise NotImplementedError("Subclasses should implement scoring")

    def score_batch(self, X: np.ndarray) -> np.ndarray:
        """
        Score a batch of samples.

        Args:
            X: Bits of shape (n, input_width) or a single sample of shape (input_width,)

        Returns:
            Scores of shape (n,)
        """
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.input_width:
            raise InvalidArgumentError(
                f"{self.name} expects {self.input_width} input bits, got shape {X.shape}"
            )
        scores = self._score(X)
        self.on_batch_scored(X.shape[0])
        return scores

    def score(self, bits) -> float:
        """Score a single sample."""
        bits = np.asarray(bits)
        if bits.ndim != 1:
            raise InvalidArgumentError(f"A single sample is one-dimensional, got shape {bits.shape}")
        return float(self.score_batch(bits)[0])

    def describe(self) -> Dict[str, Any]:
        """Identity recorded in profiles and reports."""
        return {'name': self.name, 'type': self.__class__.__name__, 'input_width': self.input_width}

    def reset_statistics(self) -> None:
        with self._lock:
            self.statistics = {
                'batches_scored': 0,
                'samples_scored': 0,
                'last_reset': time.strftime('%Y-%m-%d %H:%M:%S', time.localtime(time.time())),
            }

    def get_statistics(self) -> Dict[str, Any]:
        with self._lock:
            stats = self.statistics.copy()
            stats['name'] = self.name
            return stats

    # Hooks

    def on_batch_scored(self, n: int) -> None:
        """
        Hook for when a batch has been scored.

        Args:
            n: Number of samples in the batch
        """
        with self._lock:
            self.statistics['batches_scored'] += 1
            self.statistics['samples_scored'] += n
            self.logger.debug(f"{self.name} scored {n} samples")

    def __str__(self) -> str:
        return self.name


class ConstantDistinguisher(Distinguisher):
    """Returns the same score for every sample."""

    def __init__(self, value: float, input_width: int, logger: Optional[logging.Logger] = None):
        if not 0.0 < value < 1.0:
            raise InvalidArgumentError(f"A constant score must lie in (0, 1), got {value}")
        super().__init__(input_width, f"constant-{value}", logger)
        self.value = value

    def _score(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value, dtype=np.float64)
