"""Tests for the minibatch training loop."""

import numpy as np
import pytest

from src.data.corruption import CorruptionSpec
from src.models.autoencoder import LossKind, Variant, init_params
from src.training.trainer import AutoEncoderTrainer, LossReport, TrainConfig, train
from src.utils.errors import ConfigError, TrainingError
from src.utils.numerics import ActivationKind, derive_rng, seeded_rng


def all_variants():
    mask = CorruptionSpec.mask_indices(stride=3)
    return [Variant.ae(), Variant.dae(mask), Variant.cae(0.1), Variant.cdae(mask, 0.1)]


class TestTrainConfig:

    @pytest.mark.parametrize("field, value", [("learning_rate", -0.1), ("epochs", -1),
                                              ("batch_size", 0), ("seed", -5)])
    def test_invalid_values(self, field, value):
        with pytest.raises(ConfigError):
            TrainConfig(**{field: value})

    def test_dict_round_trip(self):
        cfg = TrainConfig(learning_rate=0.01, epochs=3, batch_size=7, loss_kind=LossKind.CROSS_ENTROPY,
                          activation=ActivationKind.TANH, seed=42, resample_noise=False)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_field(self):
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({"momentum": 0.9})


class TestTraining:

    def test_zero_learning_rate_keeps_initialization(self):
        cfg = TrainConfig(learning_rate=0.0, epochs=1, batch_size=5, seed=3)
        data = seeded_rng(0).uniform(size=(10, 6))
        params, _ = train(Variant.ae(), data, cfg, hidden_dim=4)
        expected = init_params(6, 4, cfg.activation, derive_rng(3, 0))
        np.testing.assert_array_equal(params.W, expected.W)
        np.testing.assert_array_equal(params.b, np.zeros(4))
        np.testing.assert_array_equal(params.c, np.zeros(6))

    def test_loss_halves_on_simple_data(self):
        data = seeded_rng(1).uniform(0.85, 0.95, size=(50, 10))
        cfg = TrainConfig(learning_rate=0.01, epochs=200, batch_size=50, seed=0)
        _, report = train(Variant.ae(), data, cfg, hidden_dim=50)
        assert report.trace[-1] < 0.5 * report.trace[0]
        assert report.total < 0.5 * report.trace[0]

    @pytest.mark.parametrize("variant", all_variants(), ids=lambda v: v.tag.value)
    def test_full_batch_descent_is_monotone(self, variant):
        data = seeded_rng(2).uniform(0.1, 0.9, size=(20, 10))
        cfg = TrainConfig(learning_rate=1e-3, epochs=100, batch_size=20, seed=1)
        _, report = train(variant, data, cfg, hidden_dim=5)
        trace = np.array(report.trace)
        assert len(trace) == 100
        assert np.all(np.diff(trace) <= 1e-12)

    def test_same_seed_same_weights(self):
        data = seeded_rng(3).uniform(size=(30, 8))
        cfg = TrainConfig(learning_rate=0.05, epochs=5, batch_size=7, seed=11)
        variant = Variant.cdae(CorruptionSpec.gaussian(0.2), 0.1)
        first, _ = train(variant, data, cfg, hidden_dim=4)
        second, _ = train(variant, data, cfg, hidden_dim=4)
        np.testing.assert_array_equal(first.W, second.W)

    def test_frozen_noise_is_reused(self):
        data = seeded_rng(4).uniform(size=(12, 6))
        variant = Variant.dae(CorruptionSpec.gaussian(0.2))
        resampled = TrainConfig(learning_rate=0.05, epochs=3, batch_size=4, seed=2)
        frozen = TrainConfig(learning_rate=0.05, epochs=3, batch_size=4, seed=2, resample_noise=False)
        a, _ = train(variant, data, resampled, hidden_dim=3)
        b, _ = train(variant, data, frozen, hidden_dim=3)
        assert not np.array_equal(a.W, b.W)

    def test_report_decomposition(self):
        data = seeded_rng(5).uniform(size=(16, 6))
        cfg = TrainConfig(learning_rate=0.05, epochs=2, batch_size=8)
        _, report = train(Variant.cae(0.2), data, cfg, hidden_dim=3)
        assert isinstance(report, LossReport)
        assert report.lam == 0.2
        assert report.total == pytest.approx(report.reconstruction + 0.2 * report.penalty)

    def test_batch_larger_than_data(self):
        with pytest.raises(ConfigError):
            train(Variant.ae(), np.zeros((3, 4)), TrainConfig(batch_size=5), hidden_dim=2)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_raises_training_error(self):
        data = np.full((10, 5), 1e200)
        cfg = TrainConfig(learning_rate=0.1, epochs=5, batch_size=10)
        with pytest.raises(TrainingError) as info:
            train(Variant.ae(), data, cfg, hidden_dim=3)
        assert info.value.epoch >= 0

    def test_trainer_keeps_epoch_losses(self):
        data = seeded_rng(7).uniform(size=(10, 5))
        trainer = AutoEncoderTrainer(Variant.ae(), TrainConfig(epochs=4, batch_size=5), hidden_dim=2)
        _, report = trainer.train(data)
        assert trainer.epoch_losses == report.trace

    def test_each_run_reports_only_its_own_epochs(self):
        data = seeded_rng(7).uniform(size=(10, 5))
        trainer = AutoEncoderTrainer(Variant.ae(), TrainConfig(epochs=4, batch_size=5), hidden_dim=2)
        params, _ = trainer.train(data)
        _, second = trainer.train(data, params)
        assert len(second.trace) == 4
        assert trainer.epoch_losses == second.trace
