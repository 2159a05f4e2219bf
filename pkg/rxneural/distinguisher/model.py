from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple
import json
import logging
import os

import numpy as np

from ..error import InvalidArgumentError, ModelFileError
from .base import Distinguisher

EPS = 1e-7
MODEL_FORMAT = "rxneural-model"
MODEL_VERSION = 1


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, z)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def binary_cross_entropy(p: np.ndarray, y: np.ndarray) -> float:
    """Mean BCE with p clamped to [EPS, 1 - EPS]."""
    p = np.clip(p, EPS, 1.0 - EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of the multilayer perceptron."""
    input_width: int
    hidden_sizes: Tuple[int, ...] = (128, 64)
    seed: int = 0
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.input_width < 1 or any(h < 1 for h in self.hidden_sizes):
            raise InvalidArgumentError("Layer sizes must be positive")
        if self.activation != "relu":
            raise InvalidArgumentError(f"Unsupported activation {self.activation}")

    @property
    def layer_sizes(self) -> List[int]:
        return [self.input_width, *self.hidden_sizes, 1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "input_width": self.input_width,
            "hidden_sizes": list(self.hidden_sizes),
            "seed": self.seed,
            "activation": self.activation,
        }


@dataclass
class Gradients:
    loss: float
    weights: List[np.ndarray] = field(default_factory=list)
    biases: List[np.ndarray] = field(default_factory=list)


class Model(Distinguisher):
    """
    Multilayer perceptron with rectifier hidden layers and one sigmoid output.

     Weights are float64; weights[i] has shape (fan_in, fan_out).
    """

    def __init__(self, config: ModelConfig, weights: Optional[Sequence[np.ndarray]] = None,
                 biases: Optional[Sequence[np.ndarray]] = None, logger: Optional[logging.Logger] = None):
        super().__init__(config.input_width, f"mlp-{config.input_width}-" + "-".join(map(str, config.hidden_sizes)),
                         logger)
        self.config = config
        if weights is None:
            weights, biases = self._glorot(config)
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self._validate()

    @staticmethod
    def _glorot(config: ModelConfig) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        rng = np.random.default_rng(config.seed)
        sizes = config.layer_sizes
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return weights, biases

    @classmethod
    def zeros(cls, config: ModelConfig) -> "Model":
        sizes = config.layer_sizes
        return cls(config, [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
                   [np.zeros(b) for b in sizes[1:]])

    def _validate(self) -> None:
        sizes = self.config.layer_sizes
        expected = list(zip(sizes[:-1], sizes[1:]))
        if len(self.weights) != len(expected) or len(self.biases) != len(expected):
            raise InvalidArgumentError(f"Expected {len(expected)} layers, got {len(self.weights)}")
        for i, (w, b, shape) in enumerate(zip(self.weights, self.biases, expected)):
            if w.shape != shape or b.shape != (shape[1],):
                raise InvalidArgumentError(f"Layer {i} has shape {w.shape}/{b.shape}, expected {shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidArgumentError(f"Layer {i} holds non-finite values")

    def forward(self, X: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """Activations (input first, output last) and pre-activations per layer."""
        a = np.asarray(X, dtype=np.float64)
        activations, pre = [a], []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = sigmoid(z) if i == last else relu(z)
            activations.append(a)
        return activations, pre

    def _score(self, X: np.ndarray) -> np.ndarray:
        activations, _ = self.forward(X)
        return np.clip(activations[-1][:, 0], EPS, 1.0 - EPS)

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        activations, _ = self.forward(X)
        return binary_cross_entropy(activations[-1][:, 0], np.asarray(y, dtype=np.float64))

    def gradients(self, X: np.ndarray, y: np.ndarray) -> Gradients:
        """Loss and its gradient with respect to every weight and bias."""
        activations, pre = self.forward(X)
        y = np.asarray(y, dtype=np.float64)
        p = activations[-1][:, 0]
        n = X.shape[0]
        delta = ((p - y) / n)[:, None]
        dW: List[np.ndarray] = [None] * len(self.weights)
        db: List[np.ndarray] = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            dW[i] = activations[i].T @ delta
            db[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0)
        return Gradients(binary_cross_entropy(p, y), dW, db)

    def step(self, grads: Gradients, lr: float) -> None:
        for i in range(len(self.weights)):
            self.weights[i] -= lr * grads.weights[i]
            self.biases[i] -= lr * grads.biases[i]

    def copy(self) -> "Model":
        return Model(self.config, [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.logger)

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info['hidden_sizes'] = list(self.config.hidden_sizes)
        return info

    def to_dict(self, config_hash: Optional[str] = None) -> Dict[str, Any]:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config_hash": config_hash,
            "config": self.config.to_dict(),
            "layers": [{"weights": w.tolist(), "bias": b.tolist()} for w, b in zip(self.weights, self.biases)],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "Model":
        config = ModelConfig(**doc["config"])
        return cls(config, [np.asarray(layer["weights"], dtype=np.float64).reshape(-1, len(layer["bias"]))
                            for layer in doc["layers"]],
                   [np.asarray(layer["bias"], dtype=np.float64) for layer in doc["layers"]])


def save_model(model: Model, path: str, config_hash: Optional[str] = None) -> None:
    """Write a model as JSON; floats are written in round-trip precision."""
    with open(path, "w") as f:
        json.dump(model.to_dict(config_hash), f)
    model.logger.info(f"Saved {model.name} to {path}")


def load_model(path: str) -> Model:
    if not os.path.isfile(path):
        raise ModelFileError("Model file not found", path=path)
    try:
        with open(path, "r") as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ModelFileError(f"Corrupt model file: {e}", path=path) from e
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFileError("Not a model file", path=path)
    if doc.get("version") != MODEL_VERSION:
        raise ModelFileError(f"Unsupported model version {doc.get('version')}, expected {MODEL_VERSION}", path=path)
    try:
        return Model.from_dict(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"Corrupt model file: {e}", path=path) from e


def model_config_hash(path: str) -> Optional[str]:
    with open(path, "r") as f:
        return json.load(f).get("config_hash")
