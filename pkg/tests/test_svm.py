"""Tests for the kernels and the binary SMO solver."""

import math

import numpy as np
import pytest

from src.models.svm import (
    KernelSpec,
    SvmModel,
    audit_kkt,
    decision_function,
    gram_matrix,
    kernel_eval,
    kernel_matrix,
    predict,
    smo_train,
)
from src.utils.errors import ConfigError, DataError, DimensionError
from src.utils.numerics import seeded_rng

AND_POINTS = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
AND_LABELS = np.array([-1.0, -1.0, -1.0, 1.0])
# first coordinate alone separates the classes
SPLIT_POINTS = AND_POINTS
SPLIT_LABELS = np.array([-1.0, -1.0, 1.0, 1.0])
LINEAR = KernelSpec.polynomial(1)


def two_blobs(n_per_side=30, seed=0):
    rng = seeded_rng(seed)
    pos = rng.normal([2.0, 2.0], 0.5, size=(n_per_side, 2))
    neg = rng.normal([-2.0, -2.0], 0.5, size=(n_per_side, 2))
    return np.vstack([pos, neg]), np.concatenate([np.ones(n_per_side), -np.ones(n_per_side)])


class TestKernels:

    def test_rbf_of_a_point_with_itself(self):
        x = seeded_rng(0).normal(size=7)
        assert kernel_eval(KernelSpec.rbf(0.3), x, x) == 1.0

    def test_polynomial_at_origin(self):
        assert kernel_eval(KernelSpec.polynomial(2), np.zeros(3), np.zeros(3)) == 1.0

    def test_rbf_distance_two(self):
        value = kernel_eval(KernelSpec.rbf(1.0), np.array([0.0]), np.array([2.0]))
        assert value == pytest.approx(math.exp(-2.0), rel=1e-15)

    def test_tanh_kernel(self):
        assert kernel_eval(KernelSpec.tanh(1.0, 0.0), np.zeros(2), np.ones(2)) == 0.0

    def test_matrix_agrees_with_pairwise(self):
        X = seeded_rng(1).normal(size=(5, 3))
        Y = seeded_rng(2).normal(size=(4, 3))
        spec = KernelSpec.rbf(1.5)
        expected = np.array([[kernel_eval(spec, x, y) for y in Y] for x in X])
        np.testing.assert_allclose(kernel_matrix(spec, X, Y), expected, rtol=1e-12)

    def test_rbf_gram_is_positive_semidefinite(self):
        X = seeded_rng(3).normal(size=(40, 5))
        K = gram_matrix(KernelSpec.rbf(1.0), X)
        np.testing.assert_array_equal(K, K.T)
        assert np.linalg.eigvalsh(K).min() > -1e-10

    def test_invalid_parameters(self):
        with pytest.raises(ConfigError):
            KernelSpec.rbf(0.0)
        with pytest.raises(ConfigError):
            KernelSpec.polynomial(0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            kernel_eval(LINEAR, np.zeros(2), np.zeros(3))


class TestSmo:

    @pytest.mark.parametrize("C", [1.0, 10.0, 1e6])
    def test_separable_four_points(self, C):
        model = smo_train(SPLIT_POINTS, SPLIT_LABELS, C=C, kernel=LINEAR)
        labels, _ = predict(model, SPLIT_POINTS)
        np.testing.assert_array_equal(labels, [-1, -1, 1, 1])
        assert audit_kkt(model, SPLIT_POINTS, SPLIT_LABELS, tol=1e-3) == 0
        label, value = predict(model, np.array([1.0, 1.0]))
        assert label == 1
        assert value > 0.0

    def test_and_points(self):
        model = smo_train(AND_POINTS, AND_LABELS, C=100.0, kernel=LINEAR)
        np.testing.assert_array_equal(predict(model, AND_POINTS)[0], AND_LABELS)

    def test_converged_model_passes_kkt_audit(self):
        X, y = two_blobs()
        model = smo_train(X, y, C=1.0, kernel=KernelSpec.rbf(1.0), tol=1e-3)
        assert audit_kkt(model, X, y, tol=1e-3) == 0

    def test_large_box_has_no_training_errors(self):
        X, y = two_blobs(seed=4)
        model = smo_train(X, y, C=1e6, kernel=KernelSpec.rbf(1.0))
        labels, _ = predict(model, X)
        np.testing.assert_array_equal(labels, y)

    def test_duplicating_every_sample_keeps_the_decision(self):
        queries = seeded_rng(5).uniform(-0.5, 1.5, size=(25, 2))
        single = smo_train(AND_POINTS, AND_LABELS, C=1e3, kernel=LINEAR, tol=1e-9)
        doubled = smo_train(np.repeat(AND_POINTS, 2, axis=0), np.repeat(AND_LABELS, 2),
                            C=1e3, kernel=LINEAR, tol=1e-9)
        np.testing.assert_allclose(decision_function(doubled, queries), decision_function(single, queries),
                                   atol=1e-6)

    def test_support_vector_order_is_irrelevant(self):
        X, y = two_blobs(seed=6)
        model = smo_train(X, y, C=1.0, kernel=KernelSpec.rbf(1.0))
        order = seeded_rng(7).permutation(len(model.alphas))
        shuffled = SvmModel(model.support_vectors[order], model.alphas[order], model.bias,
                            model.kernel, model.C, model.support_indices[order])
        np.testing.assert_allclose(decision_function(shuffled, X), decision_function(model, X),
                                   rtol=0, atol=1e-12)

    def test_dual_objective_never_decreases(self):
        X, y = two_blobs(seed=8)
        model = smo_train(X, y, C=1.0, kernel=KernelSpec.rbf(1.0))
        trace = np.array(model.dual_trace)
        assert len(trace) >= 1
        assert np.all(np.diff(trace) >= -1e-9 * max(1.0, abs(trace[-1])))

    def test_uncached_kernel_columns_give_the_same_model(self):
        cached = smo_train(AND_POINTS, AND_LABELS, C=10.0, kernel=LINEAR)
        streamed = smo_train(AND_POINTS, AND_LABELS, C=10.0, kernel=LINEAR, cache_limit=0)
        np.testing.assert_array_equal(predict(streamed, AND_POINTS)[0], predict(cached, AND_POINTS)[0])
        np.testing.assert_allclose(decision_function(streamed, AND_POINTS),
                                   decision_function(cached, AND_POINTS), atol=1e-2)

    def test_zero_decision_value_is_positive(self):
        model = SvmModel(np.zeros((1, 2)), np.zeros(1), 0.0, LINEAR, 1.0)
        assert predict(model, np.ones(2)) == (1, 0.0)

    def test_model_round_trip(self):
        model = smo_train(AND_POINTS, AND_LABELS, C=10.0, kernel=LINEAR)
        loaded = SvmModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(decision_function(loaded, AND_POINTS),
                                      decision_function(model, AND_POINTS))


class TestSmoInputs:

    def test_labels_must_be_signs(self):
        with pytest.raises(DataError):
            smo_train(AND_POINTS, np.array([0.0, 1.0, 0.0, 1.0]), C=1.0, kernel=LINEAR)

    def test_both_labels_required(self):
        with pytest.raises(DataError):
            smo_train(AND_POINTS, np.ones(4), C=1.0, kernel=LINEAR)

    def test_box_must_be_positive(self):
        with pytest.raises(ConfigError):
            smo_train(AND_POINTS, AND_LABELS, C=0.0, kernel=LINEAR)

    def test_label_count_must_match(self):
        with pytest.raises(DimensionError):
            smo_train(AND_POINTS, AND_LABELS[:3], C=1.0, kernel=LINEAR)
