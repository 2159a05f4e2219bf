"""Bayesian key search over single subkeys or joint sensitive-bit subkey pairs."""

from dataclasses import dataclass
from typing import Callable, List, Tuple, Union
import logging

import numpy as np

from ..ciphers import Block, BlockCipher, get_cipher
from ..data import DataFormatSpec, build_samples
from ..data.rng import map_chunks
from ..distinguisher import EPS, Distinguisher
from ..error import InvalidArgumentError
from .profiles import JwkrProfile, WkrProfile, expand_bits

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-4
# Upper bound on samples scored per work item
MAX_SCORED_PER_TASK = 1 << 18


def loglik(v):
    """Base-2 log-odds of a score clamped to [EPS, 1 - EPS]."""
    v = np.clip(np.asarray(v, dtype=np.float64), EPS, 1.0 - EPS)
    out = np.log2(v / (1.0 - v))
    return float(out) if out.ndim == 0 else out


@dataclass
class CiphertextStructure:
    """m samples of k ciphertext pairs, leaving round `round_index` (0-based subkey index)."""
    cipher: BlockCipher
    spec: DataFormatSpec
    c: Block
    c_prime: Block
    round_index: int

    def __post_init__(self):
        self.cipher = get_cipher(self.cipher)
        left = np.asarray(self.c.left)
        if left.ndim != 2 or left.shape[0] == 0:
            raise InvalidArgumentError("A ciphertext structure needs at least one sample of shape (m, k)")
        if left.shape[1] != self.spec.k:
            raise InvalidArgumentError(f"{self.spec} expects {self.spec.k} pairs per sample, got {left.shape[1]}")

    @property
    def m(self) -> int:
        return int(np.asarray(self.c.left).shape[0])

    def peel(self, key: int, key_prime: int) -> "CiphertextStructure":
        """Decrypt the last round of both ciphertext sets with a guessed subkey pair."""
        return CiphertextStructure(
            self.cipher, self.spec,
            self.cipher.decrypt_round(self.c, np.uint16(key)),
            self.cipher.decrypt_round(self.c_prime, np.uint16(key_prime)),
            self.round_index - 1,
        )

    def score(self, model: Distinguisher, keys: np.ndarray, keys_prime: np.ndarray, workers: int = 1) -> np.ndarray:
        """Scores of shape (len(keys), m) after peeling one round under each key pair."""
        keys = np.asarray(keys, dtype=np.uint16)
        keys_prime = np.asarray(keys_prime, dtype=np.uint16)
        per_candidate = self.m * self.spec.k
        chunk = max(1, MAX_SCORED_PER_TASK // per_candidate)

        def work(start: int, stop: int) -> np.ndarray:
            x = self.cipher.decrypt_round(Block(self.c.left[None], self.c.right[None]),
                                          keys[start:stop, None, None])
            x_prime = self.cipher.decrypt_round(Block(self.c_prime.left[None], self.c_prime.right[None]),
                                                keys_prime[start:stop, None, None])
            X = build_samples(self.cipher, self.spec, x, x_prime)
            return model.score_batch(X.reshape(-1, X.shape[-1])).reshape(stop - start, self.m)

        return np.concatenate(map_chunks(work, keys.size, workers=workers, chunk_size=chunk))


@dataclass
class KeyCandidateList:
    """Every candidate scored by a search, in the order tried."""
    keys: np.ndarray
    keys_prime: np.ndarray
    scores: np.ndarray
    mean_responses: np.ndarray
    l: int
    n: int
    joint: bool = False

    def __len__(self) -> int:
        return int(self.scores.size)

    @property
    def entries(self) -> List[Tuple[Union[int, Tuple[int, int]], float]]:
        if self.joint:
            return [((int(a), int(b)), float(w)) for a, b, w in zip(self.keys, self.keys_prime, self.scores)]
        return [(int(k), float(w)) for k, w in zip(self.keys, self.scores)]

    def best(self) -> Tuple[int, int, float]:
        """(key, key_prime, score) of the highest-scoring entry; first one on ties."""
        i = int(np.argmax(self.scores))
        return int(self.keys[i]), int(self.keys_prime[i]), float(self.scores[i])

    def above(self, threshold: float) -> List[Tuple[int, int, float]]:
        """Distinct key pairs scoring at least the threshold, best first."""
        seen, out = set(), []
        for i in np.argsort(-self.scores, kind="stable"):
            if self.scores[i] < threshold:
                break
            pair = (int(self.keys[i]), int(self.keys_prime[i]))
            if pair not in seen:
                seen.add(pair)
                out.append((pair[0], pair[1], float(self.scores[i])))
        return out


def _floored(sigma: np.ndarray) -> np.ndarray:
    if np.any(sigma < SIGMA_FLOOR):
        logger.warning(f"{int(np.count_nonzero(sigma < SIGMA_FLOOR))} profile deviations floored at {SIGMA_FLOOR}")
    return np.maximum(sigma, SIGMA_FLOOR)


def rank_space(candidates: np.ndarray, mean_responses: np.ndarray, mu: np.ndarray,
               inv_var: np.ndarray) -> np.ndarray:
    """Weighted squared deviation of the observed means from the profile, for every key in the space."""
    space = np.arange(mu.size, dtype=np.int64)
    lam = np.zeros(mu.size)
    for k, m_k in zip(candidates.astype(np.int64), mean_responses):
        delta = space ^ k
        lam += (m_k - mu[delta]) ** 2 * inv_var[delta]
    return lam


def _search(space_size: int, score_fn: Callable[[np.ndarray], np.ndarray], mu: np.ndarray, sigma: np.ndarray,
            n: int, l: int, seed: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if n < 1 or l < 1:
        raise InvalidArgumentError(f"n and l must be at least 1, got n={n}, l={l}")
    if n > space_size:
        logger.warning(f"Batch size {n} exceeds the {space_size}-key space; candidates will repeat")
    inv_var = 1.0 / _floored(sigma) ** 2
    rng = np.random.default_rng(seed)
    batch = np.resize(rng.permutation(space_size), n)
    tried = np.zeros(space_size, dtype=bool)
    keys, scores, means = [], [], []
    for iteration in range(l):
        v = score_fn(batch)
        w = loglik(v).sum(axis=1)
        m_k = v.mean(axis=1)
        keys.append(batch)
        scores.append(w)
        means.append(m_k)
        tried[batch] = True
        logger.debug(f"Iteration {iteration + 1}/{l}: best score {w.max():.3f}")
        if iteration == l - 1:
            break
        order = np.argsort(rank_space(batch, m_k, mu, inv_var), kind="stable")
        untried = order[~tried[order]]
        if untried.size < n:
            logger.warning(f"Only {untried.size} untried candidates left; refilling from tried ones")
        batch = np.resize(np.concatenate([untried, order[tried[order]]]), n)
    return np.concatenate(keys), np.concatenate(scores), np.concatenate(means)


def bayesian_key_search(structure: CiphertextStructure, model: Distinguisher, profile: WkrProfile, n: int, l: int,
                        seed: int, workers: int = 1) -> KeyCandidateList:
    """
    Recommend and score candidates for the subkey of structure.round_index.

    Each candidate g is paired with the related subkey the schedule implies,
    scored by the summed log-odds of the distinguisher over the m samples, and
    the next batch is the n untried keys whose predicted responses best match
    the observed mean responses.

    Args:
        structure: Ciphertexts to peel
        model: Distinguisher for the peeled rounds
        profile: Single-key wrong key response of the model
        n: Candidates per iteration
        l: Iterations
        seed: Seed of the initial batch
        workers: Worker threads for scoring

    Returns:
        KeyCandidateList of exactly l * n entries
    """
    if model.input_width != structure.spec.width:
        raise InvalidArgumentError(f"Model width {model.input_width} does not match {structure.spec}")
    cipher, lam = structure.cipher, structure.spec.lam

    def score_fn(batch: np.ndarray) -> np.ndarray:
        g = batch.astype(np.uint16)
        return structure.score(model, g, cipher.companion_subkey(g, structure.round_index, lam), workers)

    keys, scores, means = _search(1 << 16, score_fn, profile.mu, profile.sigma, n, l, seed)
    g = keys.astype(np.uint16)
    return KeyCandidateList(g, np.asarray(cipher.companion_subkey(g, structure.round_index, lam), dtype=np.uint16),
                            scores, means, l, n)


def joint_bayesian_key_search(structure: CiphertextStructure, model: Distinguisher, profile: JwkrProfile, n: int,
                              l: int, seed: int, workers: int = 1) -> KeyCandidateList:
    """
    Bayesian key search over subkey pairs supported on the profile's sensitive bits.

    Candidates are (kappa_a, kappa_b) with zeros outside sens_a and sens_b;
    the algebra is that of the single-key search with the profile cell of
    the projected differences in place of the delta lookup.

    Args:
        structure: Ciphertexts to peel
        model: Distinguisher for the peeled rounds
        profile: Joint wrong key response of the model
        n: Candidates per iteration
        l: Iterations
        seed: Seed of the initial batch
        workers: Worker threads for scoring

    Returns:
        KeyCandidateList of exactly l * n candidate pairs
    """
    if model.input_width != structure.spec.width:
        raise InvalidArgumentError(f"Model width {model.input_width} does not match {structure.spec}")
    sb = len(profile.sens_b)

    def split(batch: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        batch = batch.astype(np.uint32)
        return expand_bits(batch >> sb, profile.sens_a), expand_bits(batch & ((1 << sb) - 1), profile.sens_b)

    def score_fn(batch: np.ndarray) -> np.ndarray:
        return structure.score(model, *split(batch), workers)

    keys, scores, means = _search(profile.mu.size, score_fn, profile.mu.ravel(), profile.sigma.ravel(), n, l, seed)
    ka, kb = split(keys)
    return KeyCandidateList(ka, kb, scores, means, l, n, joint=True)


def score_key_pair(structure: CiphertextStructure, model: Distinguisher, key: int, key_prime: int) -> float:
    """Summed log-odds of one subkey pair, as the search would score it."""
    v = structure.score(model, np.asarray([key]), np.asarray([key_prime]))
    # Same reduction as the search, so calibrated thresholds compare exactly
    return float(loglik(v).sum(axis=1)[0])
