from .base import ConstantDistinguisher, Distinguisher
from .model import EPS, Model, ModelConfig, load_model, save_model
from .oracle import RoundTripOracle, StructureOracle
from .training import (
    EvalReport,
    Stage,
    StageSpec,
    TrainSchedule,
    build_stages,
    evaluate,
    significant,
    simeck_recipe,
    simon_recipe,
    staged_train,
    train,
)

__all__ = [
    "EPS",
    "ConstantDistinguisher",
    "Distinguisher",
    "EvalReport",
    "Model",
    "ModelConfig",
    "RoundTripOracle",
    "Stage",
    "StageSpec",
    "StructureOracle",
    "TrainSchedule",
    "build_stages",
    "evaluate",
    "load_model",
    "save_model",
    "significant",
    "simeck_recipe",
    "simon_recipe",
    "staged_train",
    "train",
]
