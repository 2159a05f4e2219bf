import numpy as np
import pytest

from rxneural.ciphers import CipherId
from rxneural.data import BaseFormat, DataFormatSpec, Dataset, HalfRxDifference
from rxneural.distinguisher import (
    ConstantDistinguisher,
    EvalReport,
    Model,
    ModelConfig,
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
from rxneural.distinguisher.training import report_from_scores
from rxneural.error import InvalidArgumentError

SPEC = DataFormatSpec(BaseFormat.D4, 1, 15, 3)
D = HalfRxDifference(15, 0x3)


def separable(n, seed):
    """Samples whose label is their first bit."""
    X = np.random.default_rng(seed).integers(0, 2, (n, SPEC.width)).astype(np.uint8)
    return Dataset(SPEC, CipherId.SIMON32_64, D, X, X[:, 0].copy(), seed)


@pytest.fixture
def schedule():
    return TrainSchedule(epochs=30, batch_size=32, learning_rates=(0.5,), train_size=2000, val_size=500, seed=3)


class TestSchedule:
    """Training schedules."""

    def test_learning_rates_cycle(self):
        """Test that learning rates repeat per epoch."""
        sched = TrainSchedule(learning_rates=(0.1, 0.2, 0.3))
        assert [sched.learning_rate(e) for e in range(5)] == [0.1, 0.2, 0.3, 0.1, 0.2]

    @pytest.mark.parametrize("kwargs", [{"epochs": 0}, {"batch_size": 0}, {"learning_rates": ()},
                                        {"learning_rates": (0.1, -1.0)}])
    def test_invalid(self, kwargs):
        """Test schedule validation."""
        with pytest.raises(InvalidArgumentError):
            TrainSchedule(**kwargs)

    def test_default_learning_rates(self):
        """Test the default cyclic learning rates."""
        rates = TrainSchedule().learning_rates
        assert len(rates) == 10
        assert rates[0] == pytest.approx(0.0001)
        assert rates[-1] == pytest.approx(0.1)


class TestEvaluation:
    """Accuracy reports."""

    def test_report_counts(self):
        """Test accuracy and per-class rates at threshold 0.5."""
        scores = np.asarray([0.9, 0.8, 0.2, 0.6, 0.1, 0.5])
        y = np.asarray([1, 1, 1, 0, 0, 0])
        report = report_from_scores(scores, y)
        assert report == EvalReport(accuracy=4 / 6, tpr=2 / 3, tnr=2 / 3, n=6, n_pos=3, n_neg=3)

    def test_constant_scorer(self):
        """Test that a constant positive scorer has tpr 1 and tnr 0."""
        ds = separable(200, 1)
        report = evaluate(ConstantDistinguisher(0.9, SPEC.width), ds)
        assert report.tpr == 1.0 and report.tnr == 0.0
        assert report.accuracy == pytest.approx(ds.n_real / 200)

    def test_significance(self):
        """Test the three-sigma significance test."""
        base = dict(tpr=0.5, tnr=0.5, n=16384, n_pos=8192, n_neg=8192)
        assert significant(EvalReport(accuracy=0.52, **base))
        assert not significant(EvalReport(accuracy=0.51, **base))

    def test_validity(self):
        """Test the validity threshold of a distinguisher."""
        assert EvalReport(0.52, 0.5, 0.5, 10, 5, 5).is_valid()
        assert not EvalReport(0.51, 0.5, 0.5, 10, 5, 5).is_valid()

    def test_width_mismatch(self):
        """Test that dataset and scorer widths must agree."""
        with pytest.raises(InvalidArgumentError):
            evaluate(ConstantDistinguisher(0.9, 8), separable(10, 1))


class TestTrain:
    """Mini-batch gradient descent."""

    def test_learns_separable_data(self, schedule):
        """Test that a linearly separable problem is solved."""
        model = Model(ModelConfig(SPEC.width, (16,), seed=0))
        trained, report = train(model, separable(2000, 1), separable(500, 2), schedule)
        assert report.accuracy >= 0.99
        assert evaluate(trained, separable(500, 2)) == report

    def test_input_model_untouched(self, schedule):
        """Test that training works on a copy."""
        model = Model(ModelConfig(SPEC.width, (4,), seed=0))
        before = [w.copy() for w in model.weights]
        train(model, separable(200, 1), separable(100, 2), TrainSchedule(epochs=2, batch_size=32, seed=1))
        assert all(np.array_equal(a, b) for a, b in zip(before, model.weights))

    def test_deterministic(self):
        """Test that the same schedule gives the same weights."""
        sched = TrainSchedule(epochs=2, batch_size=16, learning_rates=(0.1,), seed=7)
        model = Model(ModelConfig(SPEC.width, (4,), seed=0))
        a, _ = train(model, separable(200, 1), separable(100, 2), sched)
        b, _ = train(model, separable(200, 1), separable(100, 2), sched)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))

    def test_width_mismatch(self):
        """Test that datasets must match the model width."""
        model = Model(ModelConfig(8, (4,)))
        with pytest.raises(InvalidArgumentError):
            train(model, separable(20, 1), separable(20, 2), TrainSchedule(epochs=1))


class TestStagedTraining:
    """Staged fine-tuning."""

    def test_simon_recipe(self):
        """Test the three stages of the Simon recipe."""
        stages = simon_recipe(10, TrainSchedule(seed=4))
        assert [s.rounds for s in stages] == [8, 10, 10]
        assert [s.skip for s in stages] == [False, False, False]
        assert stages[2].schedule.learning_rates == (1e-5,)
        assert len({s.schedule.seed for s in stages}) == 3

    def test_simeck_recipe(self):
        """Test that the Simeck recipe skips the first stage."""
        stages = simeck_recipe(10)
        assert [s.skip for s in stages] == [True, False, False]
        assert [s.rounds for s in stages[1:]] == [10, 10]

    def test_build_stages(self):
        """Test that each executed stage gets fresh data at its round count."""
        sched = TrainSchedule(train_size=20, val_size=10)
        specs = [StageSpec(2, sched, skip=True), StageSpec(3, sched), StageSpec(4, sched)]
        stages = build_stages("simon", SPEC, D, specs, seed=1)
        assert stages[0].train_set is None and stages[0].skip
        assert stages[1].train_set.spec.rounds == 3
        assert len(stages[2].train_set) == 20 and len(stages[2].val_set) == 10
        assert not np.array_equal(stages[1].train_set.X, stages[2].train_set.X)

    def test_staged_train_skips(self):
        """Test that skipped stages produce no report."""
        sched = TrainSchedule(epochs=1, batch_size=16)
        stages = [Stage(None, None, sched, skip=True),
                  Stage(separable(50, 1), separable(20, 2), sched),
                  Stage(separable(50, 3), separable(20, 4), sched)]
        model, reports = staged_train(Model(ModelConfig(SPEC.width, (4,))), stages)
        assert len(reports) == 2
        assert model.input_width == SPEC.width
