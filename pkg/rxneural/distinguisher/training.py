from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from ..config import DEFAULT_LEARNING_RATES
from ..data import DataFormatSpec, Dataset, HalfRxDifference, NegativeMode, derive_seed, generate_dataset
from ..error import InvalidArgumentError
from .base import Distinguisher
from .model import Model

logger = logging.getLogger(__name__)

VALIDITY_THRESHOLD = 0.51
SCORE_CHUNK = 1 << 15


@dataclass(frozen=True)
class TrainSchedule:
    """Mini-batch gradient descent settings; learning rates cycle per epoch."""
    epochs: int = 10
    batch_size: int = 1 << 10
    learning_rates: Tuple[float, ...] = tuple(DEFAULT_LEARNING_RATES)
    train_size: int = 1 << 17
    val_size: int = 1 << 14
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "learning_rates", tuple(float(lr) for lr in self.learning_rates))
        if min(self.epochs, self.batch_size, self.train_size, self.val_size) < 1:
            raise InvalidArgumentError("Schedule counts must be at least 1")
        if not self.learning_rates or any(lr <= 0 for lr in self.learning_rates):
            raise InvalidArgumentError("Learning rates must be positive")

    def learning_rate(self, epoch: int) -> float:
        return self.learning_rates[epoch % len(self.learning_rates)]


@dataclass(frozen=True)
class EvalReport:
    """Accuracy at threshold 0.5 with per-class rates."""
    accuracy: float
    tpr: float
    tnr: float
    n: int
    n_pos: int
    n_neg: int

    def is_valid(self, threshold: float = VALIDITY_THRESHOLD) -> bool:
        return self.accuracy > threshold

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def significant(report: EvalReport, sigmas: float = 3.0) -> bool:
    """True when accuracy is above chance by more than `sigmas` binomial deviations."""
    return report.accuracy > 0.5 + sigmas * math.sqrt(0.25 / report.n)


def score_dataset(distinguisher: Distinguisher, X: np.ndarray) -> np.ndarray:
    return np.concatenate([distinguisher.score_batch(X[i:i + SCORE_CHUNK])
                           for i in range(0, X.shape[0], SCORE_CHUNK)])


def report_from_scores(scores: np.ndarray, y: np.ndarray) -> EvalReport:
    if scores.size == 0:
        raise InvalidArgumentError("Cannot evaluate on an empty dataset")
    predicted = scores > 0.5
    real = y == 1
    n_pos = int(np.count_nonzero(real))
    n_neg = int(real.size - n_pos)
    tp = int(np.count_nonzero(predicted & real))
    tn = int(np.count_nonzero(~predicted & ~real))
    return EvalReport(
        accuracy=(tp + tn) / real.size,
        tpr=tp / n_pos if n_pos else 0.0,
        tnr=tn / n_neg if n_neg else 0.0,
        n=int(real.size), n_pos=n_pos, n_neg=n_neg,
    )


def evaluate(distinguisher: Distinguisher, dataset: Dataset) -> EvalReport:
    """
    Accuracy, TPR and TNR of a distinguisher on a dataset.

    Args:
        distinguisher: Any scorer of the dataset's width
        dataset: Labelled samples

    Returns:
        EvalReport at threshold 0.5
    """
    if len(dataset) == 0:
        raise InvalidArgumentError("Cannot evaluate on an empty dataset")
    if dataset.width != distinguisher.input_width:
        raise InvalidArgumentError(
            f"Dataset width {dataset.width} does not match {distinguisher.name} ({distinguisher.input_width})"
        )
    return report_from_scores(score_dataset(distinguisher, dataset.X), dataset.y)


def _check_datasets(model: Model, *datasets: Dataset) -> None:
    for ds in datasets:
        if len(ds) == 0:
            raise InvalidArgumentError("Cannot train on an empty dataset")
        if ds.width != model.input_width:
            raise InvalidArgumentError(f"Dataset width {ds.width} does not match model width {model.input_width}")


def train(model: Model, train_set: Dataset, val_set: Dataset, sched: TrainSchedule) -> Tuple[Model, EvalReport]:
    """
    Minimise binary cross-entropy by mini-batch gradient descent.

    The input model is left untouched. Batches are reshuffled every epoch from
    a generator seeded by (sched.seed, epoch).

    Args:
        model: Starting point
        train_set: Training samples
        val_set: Validation samples
        sched: Schedule

    Returns:
        The model of the epoch with the best validation accuracy and its report
    """
    _check_datasets(model, train_set, val_set)
    current = model.copy()
    X = train_set.X
    y = train_set.y.astype(np.float64)
    n = len(train_set)
    best: Optional[Tuple[Model, EvalReport]] = None
    for epoch in range(sched.epochs):
        lr = sched.learning_rate(epoch)
        order = np.random.default_rng([sched.seed, epoch]).permutation(n)
        losses = []
        for start in range(0, n, sched.batch_size):
            batch = order[start:start + sched.batch_size]
            grads = current.gradients(X[batch], y[batch])
            current.step(grads, lr)
            losses.append(grads.loss)
        report = evaluate(current, val_set)
        current.logger.info(
            f"Epoch {epoch + 1}/{sched.epochs}: lr={lr:g} loss={np.mean(losses):.5f} "
            f"val_acc={report.accuracy:.4f} tpr={report.tpr:.4f} tnr={report.tnr:.4f}"
        )
        if best is None or report.accuracy > best[1].accuracy:
            best = (current.copy(), report)
    return best


@dataclass
class Stage:
    """One fine-tuning step of staged training."""
    train_set: Optional[Dataset]
    val_set: Optional[Dataset]
    schedule: TrainSchedule
    skip: bool = False
    label: str = ""


def staged_train(base: Model, stages: Sequence[Stage]) -> Tuple[Model, List[EvalReport]]:
    """
    Fine-tune a model through a sequence of stages.

    Args:
        base: Trained starting model
        stages: Stages in order; skipped stages are logged and ignored

    Returns:
        Final model and one report per executed stage
    """
    for stage in stages:
        if not stage.skip:
            _check_datasets(base, stage.train_set, stage.val_set)
    model, reports = base, []
    for i, stage in enumerate(stages):
        name = stage.label or f"stage {i + 1}"
        if stage.skip:
            logger.info(f"Skipping {name}")
            continue
        logger.info(f"Running {name} on {len(stage.train_set)} samples")
        model, report = train(model, stage.train_set, stage.val_set, stage.schedule)
        reports.append(report)
    return model, reports


@dataclass(frozen=True)
class StageSpec:
    """Data-only description of a stage: which rounds to train on and how."""
    rounds: int
    schedule: TrainSchedule = field(default_factory=TrainSchedule)
    skip: bool = False
    label: str = ""


def simon_recipe(target_rounds: int, schedule: TrainSchedule = TrainSchedule()) -> List[StageSpec]:
    """
    Three stages turning an (r-1)-round model into an r-round one: retrain on
    (r-2)-round data, train on r-round data, then fresh r-round data at a
    fixed 1e-5 learning rate.
    """
    return [
        StageSpec(target_rounds - 2, replace(schedule, seed=derive_seed(schedule.seed, 1)), label="stage 1"),
        StageSpec(target_rounds, replace(schedule, seed=derive_seed(schedule.seed, 2)), label="stage 2"),
        StageSpec(target_rounds, replace(schedule, learning_rates=(1e-5,), seed=derive_seed(schedule.seed, 3)),
                  label="stage 3"),
    ]


def simeck_recipe(target_rounds: int, schedule: TrainSchedule = TrainSchedule()) -> List[StageSpec]:
    """The Simon recipe with its first stage skipped."""
    stages = simon_recipe(target_rounds, schedule)
    return [replace(stages[0], skip=True)] + stages[1:]


def build_stages(cipher, spec: DataFormatSpec, d: HalfRxDifference, specs: Sequence[StageSpec], seed: int,
                 negative_mode: NegativeMode = NegativeMode.RANDOM_PLAINTEXT, workers: int = 1) -> List[Stage]:
    """Generate the datasets of each stage; every stage draws fresh data."""
    stages = []
    for i, s in enumerate(specs):
        if s.skip:
            stages.append(Stage(None, None, s.schedule, True, s.label))
            continue
        stage_spec = replace(spec, rounds=s.rounds)
        train_set = generate_dataset(cipher, stage_spec, d, s.rounds, s.schedule.train_size,
                                     derive_seed(seed, i, 0), negative_mode, workers=workers)
        val_set = generate_dataset(cipher, stage_spec, d, s.rounds, s.schedule.val_size,
                                   derive_seed(seed, i, 1), negative_mode, workers=workers)
        stages.append(Stage(train_set, val_set, s.schedule, False, s.label))
    return stages
