"""Tests for the one-vs-one classifier, its vote and the grid search."""

import numpy as np
import pytest

from src.models.multiclass_svm import (
    GRID_C,
    GRID_SIGMA_FACTORS,
    MulticlassSvm,
    SvmSettings,
    default_sigma,
    grid_search,
    multiclass_decide,
    multiclass_predict,
    multiclass_train,
)
from src.models.svm import KernelKind, KernelSpec, SvmModel, audit_kkt
from src.utils.errors import ConfigError, DataError
from src.utils.numerics import seeded_rng

CENTERS = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])


def blobs(per_class, seed):
    rng = seeded_rng(seed)
    X = np.vstack([rng.normal(c, 0.5, size=(per_class, 2)) for c in CENTERS])
    y = np.repeat(np.arange(len(CENTERS)), per_class)
    return X, y


def constant_model(bias):
    return SvmModel(np.zeros((1, 1)), np.zeros(1), bias, KernelSpec.rbf(1.0), 1.0)


class TestTraining:

    def test_three_blobs(self):
        X, y = blobs(40, seed=0)
        X_test, y_test = blobs(100, seed=1)
        model = multiclass_train(X, y, C=1.0, kernel=KernelSpec.rbf(1.0))
        accuracy = np.mean(multiclass_predict(model, X_test) == y_test)
        assert accuracy >= 0.99

    def test_one_model_per_pair(self):
        X, y = blobs(10, seed=2)
        model = multiclass_train(X, y, C=1.0, kernel=KernelSpec.rbf(1.0))
        assert sorted(model.pairwise_models) == [(0, 1), (0, 2), (1, 2)]

    def test_every_pair_model_satisfies_kkt(self):
        X, y = blobs(15, seed=6)
        model = multiclass_train(X, y, C=1.0, kernel=KernelSpec.rbf(1.0), tol=1e-3, threads=2)
        for (a, b), pair_model in model.pairwise_models.items():
            mask = (y == a) | (y == b)
            binary = np.where(y[mask] == a, 1.0, -1.0)
            assert audit_kkt(pair_model, X[mask], binary, tol=1e-3) == 0, (a, b)

    def test_two_classes_give_one_model(self):
        X, y = blobs(10, seed=3)
        keep = y < 2
        model = multiclass_train(X[keep], y[keep], C=1.0, kernel=KernelSpec.rbf(1.0))
        assert list(model.pairwise_models) == [(0, 1)]

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            multiclass_train(np.zeros((4, 2)), [1, 1, 1, 1], C=1.0, kernel=KernelSpec.rbf(1.0))

    def test_renaming_classes_renames_predictions(self):
        X, y = blobs(20, seed=4)
        X_test, _ = blobs(20, seed=5)
        rename = np.array([7, 3, 5])
        original = multiclass_predict(multiclass_train(X, y, 1.0, KernelSpec.rbf(1.0)), X_test)
        renamed = multiclass_predict(multiclass_train(X, rename[y], 1.0, KernelSpec.rbf(1.0)), X_test)
        np.testing.assert_array_equal(renamed, rename[original])

    def test_thread_count_does_not_change_the_model(self):
        X, y = blobs(15, seed=6)
        serial = multiclass_train(X, y, 1.0, KernelSpec.rbf(1.0), seed=9, threads=1)
        parallel = multiclass_train(X, y, 1.0, KernelSpec.rbf(1.0), seed=9, threads=2)
        assert serial.to_dict() == parallel.to_dict()

    def test_save_and_load(self, tmp_path):
        X, y = blobs(10, seed=7)
        model = multiclass_train(X, y, 1.0, KernelSpec.rbf(1.0))
        model.save(tmp_path / "svm.json")
        loaded = MulticlassSvm.load(tmp_path / "svm.json")
        np.testing.assert_array_equal(multiclass_predict(loaded, X), multiclass_predict(model, X))


class TestVoting:

    def test_tie_goes_to_largest_winning_margin(self):
        model = MulticlassSvm([0, 1, 2], {
            (0, 1): constant_model(0.5),   # 0 wins by 0.5
            (0, 2): constant_model(-2.0),  # 2 wins by 2
            (1, 2): constant_model(1.0),   # 1 wins by 1
        })
        votes, margins, predictions = multiclass_decide(model, np.zeros((1, 1)))
        np.testing.assert_array_equal(votes[0], [1, 1, 1])
        np.testing.assert_allclose(margins[0], [0.5, 1.0, 2.0])
        assert predictions[0] == 2

    def test_full_tie_goes_to_lowest_class(self):
        model = MulticlassSvm([0, 1, 2], {
            (0, 1): constant_model(1.0),
            (0, 2): constant_model(-1.0),
            (1, 2): constant_model(1.0),
        })
        assert multiclass_predict(model, np.zeros(1)) == 0

    def test_majority_wins_over_margin(self):
        model = MulticlassSvm([0, 1, 2], {
            (0, 1): constant_model(0.1),
            (0, 2): constant_model(0.1),
            (1, 2): constant_model(50.0),
        })
        assert multiclass_predict(model, np.zeros(1)) == 0


class TestSettings:

    def test_default_sigma(self):
        assert default_sigma(50) == 5.0
        assert SvmSettings().kernel_spec(200).sigma == 10.0

    def test_explicit_sigma_wins(self):
        assert SvmSettings(sigma=2.0).kernel_spec(50).sigma == 2.0

    def test_dict_round_trip(self):
        settings = SvmSettings(C=100.0, kernel=KernelKind.POLYNOMIAL, p=2, grid_search=True)
        assert SvmSettings.from_dict(settings.to_dict()) == settings

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            SvmSettings(C=-1.0)
        with pytest.raises(ConfigError):
            SvmSettings.from_dict({"gamma": 0.1})


class TestGridSearch:

    def test_covers_the_grid_and_picks_the_best(self):
        X, y = blobs(15, seed=8)
        chosen, results = grid_search(X, y, SvmSettings(sigma=1.0), seed=3)
        assert len(results) == len(GRID_C) * len(GRID_SIGMA_FACTORS)
        assert sorted({r.C for r in results}) == list(GRID_C)
        best = max(r.accuracy for r in results)
        assert (chosen.C, chosen.sigma) in {(r.C, r.sigma) for r in results if r.accuracy == best}
        assert chosen.kernel is KernelKind.RBF

    def test_is_seeded(self):
        X, y = blobs(10, seed=9)
        first = grid_search(X, y, SvmSettings(), seed=1)
        second = grid_search(X, y, SvmSettings(), seed=1)
        assert first == second
