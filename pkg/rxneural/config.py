import hashlib
import json
import logging
import os
import platform
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Extra, Field, ValidationError, validator

from .error import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATES = [round(0.0001 + 0.0111 * i, 4) for i in range(10)]


def load_config(config_path='config.json') -> Dict[str, Any]:
    """
    Read an experiment document from disk.

    Args:
        config_path: Path to a JSON file

    Returns:
        The raw configuration dict, with environment overrides applied
    """
    try:
        if os.path.getsize(config_path) == 0:
            raise ValueError(f"Config file '{config_path}' is empty.")
        with open(config_path, 'r') as f:
            config = json.load(f)
    except FileNotFoundError as e:
        logger.error(f"Config file '{config_path}' not found.")
        raise e
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON format in config file '{config_path}'.")
        raise e
    except PermissionError as e:

        op = platform.system()

        match op:
            case 'Windows':
                system_note = 'Try running the command prompt as an administrator.'
            case 'Linux' | 'Darwin':
                system_note = 'Try running the command with sudo.'
            case _:
                system_note = 'Try running the command with appropriate permissions.'

        logger.error(f"Permission denied to access config file '{config_path}'. ({system_note})")
        raise e

    # Worker count from the environment wins over the file
    workers = os.environ.get('RXNEURAL_WORKERS')
    if workers:
        config['workers'] = int(workers)

    return config


def _parse_word(value: Union[int, str]) -> int:
    if isinstance(value, str):
        value = int(value, 0)
    if not 0 <= value <= 0xFFFF:
        raise ValueError(f"{value} is not a 16-bit word")
    return value


class _Section(BaseModel):
    class Config:
        extra = Extra.forbid
        allow_population_by_field_name = True


class HalfRxdSection(_Section):
    lam: int = Field(15, alias="lambda", ge=1, le=15)
    delta_r: int = 0x3

    @validator("delta_r", pre=True)
    def parse_delta_r(cls, v):
        return _parse_word(v)


class FormatSection(_Section):
    base: str = "D5"
    k: int = Field(1, ge=1)

    @validator("base")
    def check_base(cls, v):
        v = v.upper()
        if v not in {f"D{i}" for i in range(1, 9)}:
            raise ValueError(f"unknown data format {v}")
        return v


class DataSection(_Section):
    train_size: int = Field(2 ** 17, ge=2)
    val_size: int = Field(2 ** 14, ge=2)
    negative_mode: str = "random_plaintext"

    @validator("negative_mode")
    def check_negative_mode(cls, v):
        if v not in ("random_plaintext", "random_bits"):
            raise ValueError(f"unknown negative mode {v}")
        return v


class ModelSection(_Section):
    hidden_sizes: List[int] = [128, 64]
    seed: int = 0


class TrainingSection(_Section):
    epochs: int = Field(10, ge=1)
    batch_size: int = Field(2 ** 10, ge=1)
    learning_rates: List[float] = DEFAULT_LEARNING_RATES

    @validator("learning_rates")
    def check_learning_rates(cls, v):
        if not v or any(lr <= 0 for lr in v):
            raise ValueError("learning rates must be a non-empty list of positive values")
        return v


class StageSection(_Section):
    rounds: int = Field(..., ge=1)
    train_size: int = Field(2 ** 17, ge=2)
    val_size: int = Field(2 ** 14, ge=2)
    epochs: int = Field(10, ge=1)
    batch_size: int = Field(2 ** 10, ge=1)
    learning_rates: Optional[List[float]] = None
    skip: bool = False


class SensitivitySection(_Section):
    xor_type: str = "TYPE1"
    n_samples: int = Field(2 ** 14, ge=1)
    bit_positions: Optional[List[int]] = None
    mask_type: str = "KTYPE1"
    n_groups: int = Field(10 ** 4, ge=1)
    symmetric: bool = True
    threshold: float = Field(0.02, ge=0)


class ProfileSection(_Section):
    samples_per_delta: int = Field(200, ge=1)
    samples_per_cell: int = Field(200, ge=1)
    sens_a: List[int] = []
    sens_b: List[int] = []


class AttackSection(_Section):
    preset: Optional[str] = None
    total_rounds: Optional[int] = None
    m: int = Field(64, ge=1)
    c1: Optional[float] = None
    c2: Optional[float] = None
    t: int = Field(16, ge=1)
    l: int = Field(4, ge=1)
    n: int = Field(32, ge=1)
    trials: int = Field(20, ge=1)
    success_on: str = "all"
    sens_last_a: List[int] = []
    sens_last_b: List[int] = []
    sens_penult_a: List[int] = []
    sens_penult_b: List[int] = []
    quantile: float = Field(0.1, ge=0, le=1)


class PathsSection(_Section):
    runs_dir: str = "runs"
    dataset: Optional[str] = None
    val_dataset: Optional[str] = None
    model: Optional[str] = None
    model_r_minus_1: Optional[str] = None
    profile: Optional[str] = None
    profile_r_minus_1: Optional[str] = None


class ExperimentConfig(_Section):
    """Schema of an experiment document; every section has defaults."""
    name: str = "experiment"
    seed: int = Field(0, ge=0, lt=2 ** 64)
    workers: int = Field(1, ge=1)
    cipher: str = "simon"
    half_rxd: HalfRxdSection = HalfRxdSection()
    data_format: FormatSection = FormatSection()
    rounds: int = Field(8, ge=1)
    data: DataSection = DataSection()
    model: ModelSection = ModelSection()
    training: TrainingSection = TrainingSection()
    stages: List[StageSection] = []
    sensitivity: SensitivitySection = SensitivitySection()
    profile: ProfileSection = ProfileSection()
    attack: AttackSection = AttackSection()
    paths: PathsSection = PathsSection()

    @validator("cipher")
    def check_cipher(cls, v):
        v = v.lower()
        if v not in ("simon", "simeck"):
            raise ValueError(f"unknown cipher {v}")
        return v


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw dict against the experiment schema."""
    try:
        return ExperimentConfig.parse_obj(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigurationError(f"Invalid configuration at '{where}': {first['msg']}") from e


def load_experiment(config_path='config.json') -> ExperimentConfig:
    return parse_config(load_config(config_path))


def canonical_json(cfg: Union[ExperimentConfig, Dict[str, Any]]) -> str:
    if isinstance(cfg, BaseModel):
        cfg = json.loads(cfg.json(by_alias=True))
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: Union[ExperimentConfig, Dict[str, Any]]) -> str:
    """SHA-256 hex digest of the canonical JSON rendering, worker count and paths excluded."""
    doc = json.loads(canonical_json(cfg))
    # Neither changes what an artifact contains
    doc.pop("workers", None)
    doc.pop("paths", None)
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()
