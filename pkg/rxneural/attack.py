"""
Key recovery on the last two rounds above a related-key distinguisher.

Simon subkeys are guessed one word at a time, the related subkey following from
the linear schedule; Simeck subkey pairs are guessed jointly on their sensitive
bits. Both run the same two-stage filter: a search for the last subkey whose
survivors above c1 each seed a search for the penultimate subkey, and the best
pair above c2 wins.
"""

from dataclasses import asdict, dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union
import json
import logging
import math
import time

import numpy as np
from pydantic import BaseModel

from .ciphers import Block, CipherId, MasterKey, RoundKeys, get_cipher
from .config import ExperimentConfig
from .data import (
    BaseFormat,
    CounterRng,
    DataFormatSpec,
    HalfRxDifference,
    RxKeyPair,
    derive_seed,
    generate_real_structure,
    map_chunks,
)
from .distinguisher import Distinguisher, StructureOracle
from .error import AttackError, InvalidArgumentError
from .keyrank import (
    CiphertextStructure,
    JwkrProfile,
    KeyCandidateList,
    WkrProfile,
    bayesian_key_search,
    bit_mask,
    joint_bayesian_key_search,
    score_key_pair,
)

logger = logging.getLogger(__name__)

ALL_BITS = tuple(range(16))
SUCCESS_CRITERIA = ("all", "last_round")

PRESETS: Dict[str, Dict[str, Any]] = {
    "simon-desk": dict(cipher="simon", half_rxd=(15, 0x3), base="D5", k=1, total_rounds=10, m=64,
                       t=16, l=4, n=32, max_survivors=8),
    "simeck-desk": dict(cipher="simeck", half_rxd=(1, 0x4), base="D7", k=1, total_rounds=11, m=64,
                        t=16, l=4, n=32, max_survivors=8,
                        sens_last=(5, 9, 10, 14, 15), sens_penult=(4, 5, 8, 9, 10, 13, 14, 15)),
    "simon-14r": dict(cipher="simon", half_rxd=(4, 0x22), base="D5", k=28, total_rounds=14, m=1 << 10,
                      c1=500.0, c2=1000.0, t=1 << 10, l=6, n=32, long_running=True),
    "simon-15r": dict(cipher="simon", half_rxd=(4, 0x22), base="D5", k=28, total_rounds=15, m=1 << 10,
                      c1=16.0, c2=500.0, t=1 << 10, l=6, n=32, long_running=True),
    "simeck-16r": dict(cipher="simeck", half_rxd=(1, 0x4), base="D7", k=36, total_rounds=16, m=1 << 10,
                       c1=150.0, c2=1000.0, t=1 << 10, l=4, n=32, long_running=True,
                       sens_last=(5, 9, 10, 14, 15), sens_penult=(4, 5, 8, 9, 10, 13, 14, 15)),
    "simeck-17r": dict(cipher="simeck", half_rxd=(1, 0x4), base="D7", k=36, total_rounds=17, m=1 << 10,
                       c1=4.0, c2=100.0, t=1 << 10, l=4, n=32, long_running=True,
                       sens_last=(5, 9, 10, 14, 15), sens_penult=(5, 9, 10, 14, 15)),
}


def _bits(bits: Sequence[int]) -> Tuple[int, ...]:
    return tuple(sorted(int(b) for b in bits))


@dataclass(frozen=True)
class AttackConfig:
    """
    Parameters of one key-recovery attack.

    spec describes the samples of both distinguishers; total_rounds counts the
    attacked rounds, so the distinguishers cover total_rounds - 1 and
    total_rounds - 2 rounds. Sensitive sets only matter for joint guessing.
    """
    cipher: CipherId
    d: HalfRxDifference
    spec: DataFormatSpec
    total_rounds: int
    m: int
    c1: Optional[float] = None
    c2: Optional[float] = None
    t: int = 16
    l: int = 4
    n: int = 32
    seed: int = 0
    workers: int = 1
    max_survivors: Optional[int] = None
    sens_last_a: Tuple[int, ...] = ()
    sens_last_b: Tuple[int, ...] = ()
    sens_penult_a: Tuple[int, ...] = ()
    sens_penult_b: Tuple[int, ...] = ()
    long_running: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cipher", CipherId.parse(self.cipher))
        for name in ("sens_last_a", "sens_last_b", "sens_penult_a", "sens_penult_b"):
            object.__setattr__(self, name, _bits(getattr(self, name)))
        if self.total_rounds < 3:
            raise InvalidArgumentError(f"An attack needs at least 3 rounds, got {self.total_rounds}")
        if self.d.lam != self.spec.lam:
            raise InvalidArgumentError(f"Rotation offset of {self.d} does not match {self.spec}")
        if min(self.m, self.t, self.l, self.n) < 1:
            raise InvalidArgumentError("m, t, l and n must be at least 1")
        for name in ("c1", "c2"):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise InvalidArgumentError(f"{name} must be finite, got {value}")
        if self.max_survivors is not None and self.max_survivors < 1:
            raise InvalidArgumentError("max_survivors must be at least 1")
        if self.joint and not all((self.sens_last_a, self.sens_last_b, self.sens_penult_a, self.sens_penult_b)):
            raise InvalidArgumentError("Joint attacks need non-empty sensitive bit sets for both rounds")

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def joint(self) -> bool:
        """Simeck's subkey RX-differences depend on the key, so its pairs are guessed jointly."""
        return self.cipher is CipherId.SIMECK32_64

    @property
    def last_index(self) -> int:
        return self.total_rounds - 1

    def guessed_bits(self, stage: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """Bit positions guessed for (rk, rk') at stage 1 (last round) or 2 (penultimate)."""
        if not self.joint:
            return ALL_BITS, ALL_BITS
        if stage == 1:
            return self.sens_last_a, self.sens_last_b
        return self.sens_penult_a, self.sens_penult_b

    @property
    def recovered_key_bits(self) -> int:
        """Key information recovered: the guessed bits of the first member of each pair."""
        return len(self.guessed_bits(1)[0]) + len(self.guessed_bits(2)[0])

    def with_thresholds(self, c1: float, c2: float) -> "AttackConfig":
        return replace(self, c1=float(c1), c2=float(c2))

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        # Reports do not depend on the worker count
        out.pop("workers")
        out["cipher"] = self.cipher.value
        out["d"] = str(self.d)
        out["spec"] = {"base": self.spec.base.name, "k": self.spec.k, "lambda": self.spec.lam,
                       "rounds": self.spec.rounds}
        return out

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "AttackConfig":
        """
        Build a named parameter set; overrides replace preset values.

        Args:
            name: One of PRESETS
            **overrides: Field values taking precedence

        Returns:
            AttackConfig
        """
        if name not in PRESETS:
            raise InvalidArgumentError(f"Unknown attack preset '{name}', expected one of {sorted(PRESETS)}")
        p = dict(PRESETS[name])
        lam, delta_r = p.pop("half_rxd")
        base, k = p.pop("base"), p.pop("k")
        sens_last = p.pop("sens_last", ())
        sens_penult = p.pop("sens_penult", ())
        d = HalfRxDifference(lam, delta_r)
        fields = dict(p, d=d, spec=DataFormatSpec(BaseFormat.parse(base), k, lam, p["total_rounds"] - 1),
                      sens_last_a=sens_last, sens_last_b=sens_last,
                      sens_penult_a=sens_penult, sens_penult_b=sens_penult)
        fields.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**fields)

    @classmethod
    def from_experiment(cls, cfg: ExperimentConfig) -> "AttackConfig":
        """Attack parameters of an experiment document, starting from its preset when one is named."""
        a = cfg.attack
        common = dict(seed=cfg.seed, workers=cfg.workers, c1=a.c1, c2=a.c2)
        if a.preset:
            return cls.from_preset(a.preset, **common)
        total_rounds = a.total_rounds or cfg.rounds + 1
        d = HalfRxDifference(cfg.half_rxd.lam, cfg.half_rxd.delta_r)
        return cls(
            cipher=cfg.cipher, d=d,
            spec=DataFormatSpec(BaseFormat.parse(cfg.data_format.base), cfg.data_format.k, d.lam, total_rounds - 1),
            total_rounds=total_rounds, m=a.m, t=a.t, l=a.l, n=a.n,
            sens_last_a=a.sens_last_a, sens_last_b=a.sens_last_b,
            sens_penult_a=a.sens_penult_a, sens_penult_b=a.sens_penult_b,
            **common,
        )


@dataclass
class AttackChallenge:
    """m samples of k pairs encrypted under one secret related-key pair."""
    key_pair: RxKeyPair
    c: Block
    c_prime: Block
    rk: RoundKeys
    rk_prime: RoundKeys
    seed: int

    def true_pair(self, index: int, bits_a: Sequence[int] = ALL_BITS,
                  bits_b: Sequence[int] = ALL_BITS) -> Tuple[int, int]:
        """True subkeys of a round restricted to the given bit positions."""
        return int(self.rk[index]) & bit_mask(bits_a), int(self.rk_prime[index]) & bit_mask(bits_b)

    def states(self, peeled: int) -> Tuple[Block, Block]:
        """Intermediate states after decrypting the last `peeled` rounds with the true subkeys."""
        cipher = get_cipher(self.rk.cipher)
        s, s_prime = self.c, self.c_prime
        for i in range(peeled):
            index = len(self.rk) - 1 - i
            s = cipher.decrypt_round(s, self.rk[index])
            s_prime = cipher.decrypt_round(s_prime, self.rk_prime[index])
        return s, s_prime


def generate_challenge(cfg: AttackConfig, seed: int) -> AttackChallenge:
    """Draw a random master key and encrypt the attack's ciphertext structure under it."""
    rng = CounterRng(derive_seed(seed, 0))
    words = tuple(int(w) for w in rng.words(np.arange(4), 0))
    key_pair = RxKeyPair.related(MasterKey(words), cfg.d.lam)
    s = generate_real_structure(cfg.cipher, cfg.spec, cfg.d, cfg.total_rounds, cfg.m, derive_seed(seed, 1), key_pair)
    return AttackChallenge(key_pair, s.c, s.c_prime, s.rk, s.rk_prime, seed)


class AttackResult(BaseModel):
    """Outcome of one attack; serialised as the attack report."""
    cipher: str
    total_rounds: int
    joint: bool
    last_round_key: int
    last_round_key_prime: int
    penultimate_key: int
    penultimate_key_prime: int
    guessed_bits: Dict[str, List[int]]
    stage1_score: float
    stage2_score: float
    attempts: int
    fallback: bool
    wall_time: float
    data_complexity: int
    data_log2: float
    time_log2: float
    recovered_key_bits: int
    last_round_correct: Optional[bool] = None
    penultimate_correct: Optional[bool] = None
    config: Dict[str, Any] = {}
    config_hash: Optional[str] = None

    def succeeded(self, success_on: str = "all") -> bool:
        if success_on not in SUCCESS_CRITERIA:
            raise InvalidArgumentError(f"success_on must be one of {SUCCESS_CRITERIA}, got '{success_on}'")
        if success_on == "last_round":
            return bool(self.last_round_correct)
        return bool(self.last_round_correct and self.penultimate_correct)

    def summary(self) -> str:
        last = f"({self.last_round_key:#06x}, {self.last_round_key_prime:#06x})"
        penult = f"({self.penultimate_key:#06x}, {self.penultimate_key_prime:#06x})"
        status = "fallback" if self.fallback else "accepted"
        lines = [
            f"{self.cipher} {self.total_rounds} rounds: {status} after {self.attempts} attempt(s) "
            f"in {self.wall_time:.2f}s",
            f"  rk[{self.total_rounds - 1}] pair {last} score {self.stage1_score:.3f}",
            f"  rk[{self.total_rounds - 2}] pair {penult} score {self.stage2_score:.3f}",
            f"  data 2^{self.data_log2:.2f} chosen plaintexts, time 2^{self.time_log2:g} "
            f"({self.recovered_key_bits} key bits recovered)",
        ]
        if self.last_round_correct is not None:
            lines.append(f"  last round correct: {self.last_round_correct}, "
                         f"penultimate correct: {self.penultimate_correct}")
        return "\n".join(lines)


def complexity_report(cfg: AttackConfig, recovered_bits: Optional[int] = None) -> Tuple[float, float]:
    """
    Data and time complexity of an attack.

    Args:
        cfg: Attack parameters
        recovered_bits: Key information bits recovered; defaults to the guessed ones

    Returns:
        (log2 of the m * k * 2 chosen plaintexts, log2 of the brute-force remainder)
    """
    bits = cfg.recovered_key_bits if recovered_bits is None else recovered_bits
    if not 0 <= bits <= 64:
        raise InvalidArgumentError(f"Recovered bits must be in 0..64, got {bits}")
    return math.log2(cfg.m * cfg.k * 2), float(64 - bits)


Profiles = Tuple[Union[WkrProfile, JwkrProfile], Union[WkrProfile, JwkrProfile]]


def _check_setup(cfg: AttackConfig, models: Sequence[Distinguisher], profiles: Profiles) -> None:
    for model in models:
        if model.input_width != cfg.spec.width:
            raise AttackError(f"{model.name} takes {model.input_width} bits, {cfg.spec} has {cfg.spec.width}")
    expected = JwkrProfile if cfg.joint else WkrProfile
    for stage, profile in enumerate(profiles, start=1):
        if not isinstance(profile, expected):
            raise AttackError(f"{cfg.cipher.value} attacks need {expected.__name__} profiles, "
                              f"got {type(profile).__name__} for stage {stage}")
        index = profile.metadata.get("round_index")
        if index is not None and index != cfg.total_rounds - stage:
            raise AttackError(f"Stage {stage} profile targets subkey {index}, "
                              f"the attack guesses subkey {cfg.total_rounds - stage}")
        if cfg.joint and (profile.sens_a, profile.sens_b) != cfg.guessed_bits(stage):
            raise AttackError(f"Stage {stage} profile covers bits {profile.sens_a}/{profile.sens_b}, "
                              f"the attack guesses {cfg.guessed_bits(stage)}")


def _search(cfg: AttackConfig, structure: CiphertextStructure, model: Distinguisher, profile, seed: int
            ) -> KeyCandidateList:
    if cfg.joint:
        return joint_bayesian_key_search(structure, model, profile, cfg.n, cfg.l, seed, cfg.workers)
    return bayesian_key_search(structure, model, profile, cfg.n, cfg.l, seed, cfg.workers)


@dataclass
class _Guess:
    last: Tuple[int, int]
    stage1_score: float
    penultimate: Tuple[int, int]
    stage2_score: float


def run_attack(cfg: AttackConfig, model_r: Distinguisher, model_r_minus_1: Distinguisher, profiles: Profiles,
               challenge: Optional[AttackChallenge] = None) -> AttackResult:
    """
    Recover the last two subkeys (or their sensitive bits).

    Each attempt searches the last subkey, keeps the candidates scoring at least
    c1, peels one round under each and searches the penultimate subkey. An
    attempt ends the attack once its best pair reaches c2; after t attempts the
    best pair seen is returned instead.

    Args:
        cfg: Attack parameters with both thresholds set
        model_r: Distinguisher over total_rounds - 1 rounds
        model_r_minus_1: Distinguisher over total_rounds - 2 rounds
        profiles: Wrong key response of each distinguisher, last round first
        challenge: Ciphertexts to attack; drawn from cfg.seed when omitted

    Returns:
        AttackResult, with correctness filled in against the challenge keys
    """
    if cfg.c1 is None or cfg.c2 is None:
        raise InvalidArgumentError("Both thresholds must be set; run calibrate_thresholds first")
    _check_setup(cfg, (model_r, model_r_minus_1), profiles)
    challenge = challenge or generate_challenge(cfg, cfg.seed)
    cipher = get_cipher(cfg.cipher)
    structure = CiphertextStructure(cipher, cfg.spec, challenge.c, challenge.c_prime, cfg.last_index)
    started = time.perf_counter()
    best: Optional[_Guess] = None
    best_first: Optional[Tuple[int, int, float]] = None
    attempts = 0
    for attempt in range(cfg.t):
        attempts += 1
        first = _search(cfg, structure, model_r, profiles[0], derive_seed(cfg.seed, attempt, 1))
        top = first.best()
        if best_first is None or top[2] > best_first[2]:
            best_first = top
        survivors = first.above(cfg.c1)
        if cfg.max_survivors is not None:
            survivors = survivors[:cfg.max_survivors]
        logger.info(f"Attempt {attempt + 1}/{cfg.t}: {len(survivors)} candidate(s) at or above c1={cfg.c1:g}")
        for j, (key, key_prime, score) in enumerate(survivors):
            second = _search(cfg, structure.peel(key, key_prime), model_r_minus_1, profiles[1],
                             derive_seed(cfg.seed, attempt, 2, j))
            k2, kp2, score2 = second.best()
            if best is None or score2 > best.stage2_score:
                best = _Guess((key, key_prime), score, (k2, kp2), score2)
        if best is not None and best.stage2_score >= cfg.c2:
            break
    fallback = best is None or best.stage2_score < cfg.c2
    if best is None:
        logger.warning(f"No candidate reached c1 in {cfg.t} attempts; extending the best last-round guess")
        key, key_prime, score = best_first
        second = _search(cfg, structure.peel(key, key_prime), model_r_minus_1, profiles[1],
                         derive_seed(cfg.seed, cfg.t, 2))
        k2, kp2, score2 = second.best()
        best = _Guess((key, key_prime), score, (k2, kp2), score2)
    elif fallback:
        logger.warning(f"No pair reached c2={cfg.c2:g} in {cfg.t} attempts; returning the best pair seen")
    wall_time = time.perf_counter() - started

    bits_last, bits_penult = cfg.guessed_bits(1), cfg.guessed_bits(2)
    data_log2, time_log2 = complexity_report(cfg)
    result = AttackResult(
        cipher=cfg.cipher.value, total_rounds=cfg.total_rounds, joint=cfg.joint,
        last_round_key=best.last[0], last_round_key_prime=best.last[1],
        penultimate_key=best.penultimate[0], penultimate_key_prime=best.penultimate[1],
        guessed_bits={"last_a": list(bits_last[0]), "last_b": list(bits_last[1]),
                      "penultimate_a": list(bits_penult[0]), "penultimate_b": list(bits_penult[1])},
        stage1_score=best.stage1_score, stage2_score=best.stage2_score,
        attempts=attempts, fallback=fallback, wall_time=wall_time,
        data_complexity=cfg.m * cfg.k * 2, data_log2=data_log2, time_log2=time_log2,
        recovered_key_bits=cfg.recovered_key_bits,
        last_round_correct=best.last == challenge.true_pair(cfg.last_index, *bits_last),
        penultimate_correct=best.penultimate == challenge.true_pair(cfg.last_index - 1, *bits_penult),
        config=cfg.to_dict(),
    )
    logger.info(f"Attack finished: last round {'correct' if result.last_round_correct else 'wrong'}, "
                f"penultimate {'correct' if result.penultimate_correct else 'wrong'}")
    return result


ModelsArg = Union[Tuple[Distinguisher, Distinguisher], Callable[[AttackChallenge], Tuple[Distinguisher, Distinguisher]]]


def _resolve(arg, challenge: AttackChallenge):
    return arg(challenge) if callable(arg) else arg


def calibrate_thresholds(cfg: AttackConfig, models: ModelsArg, trials: int, quantile: float = 0.1
                         ) -> Tuple[float, float]:
    """
    Thresholds from the scores the correct subkeys obtain.

    Each trial draws a fresh challenge, scores the true last-round pair, peels
    it and scores the true penultimate pair; the thresholds are the requested
    quantile of each stage's scores.

    Args:
        cfg: Attack parameters; thresholds are ignored
        models: (model_r, model_r_minus_1), or a function building them from a challenge
        trials: Number of challenges
        quantile: Quantile in [0, 1]

    Returns:
        (c1, c2)
    """
    if trials < 1:
        raise InvalidArgumentError(f"Calibration needs at least one trial, got {trials}")
    if not 0.0 <= quantile <= 1.0:
        raise InvalidArgumentError(f"quantile must be in [0, 1], got {quantile}")
    cipher = get_cipher(cfg.cipher)
    first, second = [], []
    for i in range(trials):
        challenge = generate_challenge(cfg, derive_seed(cfg.seed, 7, i))
        model_r, model_r_minus_1 = _resolve(models, challenge)
        structure = CiphertextStructure(cipher, cfg.spec, challenge.c, challenge.c_prime, cfg.last_index)
        last = challenge.true_pair(cfg.last_index, *cfg.guessed_bits(1))
        penult = challenge.true_pair(cfg.last_index - 1, *cfg.guessed_bits(2))
        first.append(score_key_pair(structure, model_r, *last))
        second.append(score_key_pair(structure.peel(*last), model_r_minus_1, *penult))
    c1, c2 = float(np.quantile(first, quantile)), float(np.quantile(second, quantile))
    logger.info(f"Calibrated over {trials} trial(s) at quantile {quantile:g}: c1={c1:.3f} c2={c2:.3f}")
    return c1, c2


class TrialRecord(BaseModel):
    index: int
    seed: int
    success: bool
    result: AttackResult


class HarnessReport(BaseModel):
    """Success rate of independent attacks and their per-trial records."""
    rate: float
    successes: int
    n_attacks: int
    success_on: str
    trials: List[TrialRecord]
    config_hash: Optional[str] = None


def success_rate_harness(cfg: AttackConfig, models: ModelsArg, profiles, n_attacks: int, workers: int = 1,
                         success_on: str = "all", log_path: Optional[str] = None,
                         config_hash: Optional[str] = None) -> HarnessReport:
    """
    Run independent attacks under fresh master keys.

    Args:
        cfg: Attack parameters with thresholds set
        models: Distinguisher pair, or a function building it from a challenge
        profiles: Profile pair, or a function building it from a challenge
        n_attacks: Number of attacks
        workers: Attacks run concurrently
        success_on: 'all' guessed positions or 'last_round' only
        log_path: Optional JSON-lines file receiving one record per trial
        config_hash: Hash of the producing configuration, stamped on every record

    Returns:
        HarnessReport
    """
    if n_attacks < 1:
        raise InvalidArgumentError(f"n_attacks must be at least 1, got {n_attacks}")
    if success_on not in SUCCESS_CRITERIA:
        raise InvalidArgumentError(f"success_on must be one of {SUCCESS_CRITERIA}, got '{success_on}'")

    def trial(start: int, stop: int) -> TrialRecord:
        seed = derive_seed(cfg.seed, 11, start)
        trial_cfg = replace(cfg, seed=seed, workers=1)
        challenge = generate_challenge(trial_cfg, seed)
        model_r, model_r_minus_1 = _resolve(models, challenge)
        result = run_attack(trial_cfg, model_r, model_r_minus_1, _resolve(profiles, challenge), challenge)
        result = result.copy(update={"config_hash": config_hash})
        record = TrialRecord(index=start, seed=seed, success=result.succeeded(success_on), result=result)
        logger.info(f"Trial {start + 1}/{n_attacks}: {'success' if record.success else 'failure'}")
        return record

    records = map_chunks(trial, n_attacks, workers=workers, chunk_size=1)
    if log_path:
        with open(log_path, "w") as f:
            for record in records:
                f.write(record.json() + "\n")
    successes = sum(r.success for r in records)
    return HarnessReport(rate=successes / n_attacks, successes=successes, n_attacks=n_attacks,
                         success_on=success_on, trials=records, config_hash=config_hash)


def synthetic_setup(cfg: AttackConfig, hit: float = 0.9, miss: float = 0.5, decay: float = 0.8,
                    step: bool = False, noise: float = 0.0):
    """
    Structure oracles standing in for both distinguishers, with their exact profiles.

    Returns:
        (factory building (model_r, model_r_minus_1) for a challenge, (profile_r, profile_r_minus_1))
    """
    oracle_args = dict(hit=hit, miss=miss, decay=decay, step=step, noise=noise)
    (la, lb), (pa, pb) = cfg.guessed_bits(1), cfg.guessed_bits(2)

    def factory(challenge: AttackChallenge) -> Tuple[StructureOracle, StructureOracle]:
        return (StructureOracle(cfg.spec, challenge.states(1), bit_mask(la), bit_mask(lb), **oracle_args),
                StructureOracle(cfg.spec, challenge.states(2), bit_mask(pa), bit_mask(pb), **oracle_args))

    empty = (Block(np.zeros((1, cfg.k), dtype=np.uint16), np.zeros((1, cfg.k), dtype=np.uint16)),) * 2
    first = StructureOracle(cfg.spec, empty, bit_mask(la), bit_mask(lb), **oracle_args)
    second = StructureOracle(cfg.spec, empty, bit_mask(pa), bit_mask(pb), **oracle_args)
    if cfg.joint:
        profiles = (first.jwkr_profile(la, lb, cfg.last_index), second.jwkr_profile(pa, pb, cfg.last_index - 1))
    else:
        profiles = (first.wkr_profile(cfg.d.lam, cfg.last_index), second.wkr_profile(cfg.d.lam, cfg.last_index - 1))
    return factory, profiles


def write_report(result: Union[AttackResult, HarnessReport], path: str, timings: bool = True) -> None:
    """Write a report as sorted JSON; without timings the file depends on the inputs only."""
    exclude = None
    if not timings:
        exclude = {"wall_time"} if isinstance(result, AttackResult) else {"trials": {"__all__": {"result": {"wall_time"}}}}
    with open(path, "w") as f:
        json.dump(json.loads(result.json(exclude=exclude)), f, indent=2, sort_keys=True)
