"""Tests for activations, seeded streams, weight init and the dense kernels."""

import math

import numpy as np
import pytest

from src.utils.errors import DimensionError
from src.utils.numerics import (
    ActivationKind,
    activate,
    activate_prime_from_output,
    activate_second_from_output,
    axpy,
    check_dim,
    derive_rng,
    identity,
    init_weights,
    matmul,
    matvec,
    seeded_rng,
    transpose,
)

SIGMOID = ActivationKind.SIGMOID
TANH = ActivationKind.TANH


class TestActivations:

    def test_fixed_points(self):
        np.testing.assert_allclose(activate(SIGMOID, np.array([0.0])), [0.5])
        np.testing.assert_allclose(activate(TANH, np.array([0.0])), [0.0])
        np.testing.assert_allclose(activate(SIGMOID, np.array([math.log(3.0)])), [0.75], rtol=1e-14)

    def test_derivatives_from_output(self):
        np.testing.assert_allclose(activate_prime_from_output(SIGMOID, np.array([0.5])), [0.25])
        np.testing.assert_allclose(activate_prime_from_output(TANH, np.array([0.0])), [1.0])
        np.testing.assert_allclose(activate_prime_from_output(SIGMOID, np.array([0.75])), [0.1875])

    @pytest.mark.parametrize("kind", [SIGMOID, TANH])
    def test_derivative_matches_finite_difference(self, kind):
        z = seeded_rng(21).uniform(-5.0, 5.0, size=1000)
        step = 1e-4

        def central(h):
            return (activate(kind, z + h) - activate(kind, z - h)) / (2 * h)

        # Richardson step removes the h² truncation term
        numeric = (4 * central(step) - central(2 * step)) / 3
        analytic = activate_prime_from_output(kind, activate(kind, z))
        assert np.max(np.abs(analytic - numeric) / np.abs(analytic)) < 1e-7

    @pytest.mark.parametrize("kind", [SIGMOID, TANH])
    def test_second_derivative_is_derivative_of_first(self, kind):
        h = np.linspace(-0.9, 0.9, 37) if kind is TANH else np.linspace(0.05, 0.95, 37)
        step = 1e-6
        numeric = (activate_prime_from_output(kind, h + step)
                   - activate_prime_from_output(kind, h - step)) / (2 * step)
        np.testing.assert_allclose(activate_second_from_output(kind, h), numeric, atol=1e-8)

    def test_sigmoid_stays_finite_for_huge_inputs(self):
        out = activate(SIGMOID, np.array([-1e6, 1e6]))
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-300)


class TestRandomStreams:

    def test_same_seed_same_stream(self):
        a = seeded_rng(7).uniform(size=5)
        b = seeded_rng(7).uniform(size=5)
        np.testing.assert_array_equal(a, b)

    def test_derived_streams_depend_on_key_order(self):
        a = derive_rng(1, 2, 3).standard_normal(4)
        b = derive_rng(1, 3, 2).standard_normal(4)
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(a, derive_rng(1, 2, 3).standard_normal(4))


class TestInitWeights:

    def test_bound_for_first_mnist_layer(self):
        W = init_weights(200, 784, seeded_rng(0))
        bound = math.sqrt(6.0) / math.sqrt(984.0)
        assert W.shape == (200, 784)
        assert np.all(np.abs(W) < bound)
        assert bound == pytest.approx(0.07807, abs=1e-5)

    def test_draws_are_centered_inside_the_open_interval(self):
        W = init_weights(100, 100, seeded_rng(5))
        bound = math.sqrt(6.0) / math.sqrt(200.0)
        assert W.size == 10_000
        assert -bound < W.min() and W.max() < bound
        standard_error = (bound / math.sqrt(3.0)) / math.sqrt(W.size)
        assert abs(W.mean()) < 3 * standard_error

    def test_single_unit_bound(self):
        W = init_weights(1, 1, seeded_rng(3))
        assert abs(W[0, 0]) < math.sqrt(3.0)

    def test_deterministic(self):
        np.testing.assert_array_equal(init_weights(5, 4, seeded_rng(9)), init_weights(5, 4, seeded_rng(9)))

    def test_zero_dimension_rejected(self):
        with pytest.raises(DimensionError):
            init_weights(0, 4, seeded_rng(0))


class TestDenseKernels:

    def test_identity_times_vector(self):
        v = np.array([3.0, -1.0])
        np.testing.assert_array_equal(matvec(identity(2), v), v)

    def test_double_transpose(self):
        A = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(transpose(transpose(A)), A)

    def test_hand_product(self):
        np.testing.assert_array_equal(matvec(np.array([[1.0, 2.0], [3.0, 4.0]]), np.ones(2)), [3.0, 7.0])

    def test_shape_mismatches(self):
        with pytest.raises(DimensionError):
            matmul(np.ones((2, 3)), np.ones((2, 3)))
        with pytest.raises(DimensionError):
            matvec(np.ones((2, 3)), np.ones(2))
        with pytest.raises(DimensionError):
            axpy(2.0, np.ones(3), np.ones(4))
        with pytest.raises(DimensionError):
            check_dim(np.ones((4, 5)), 6, "input")

    def test_axpy(self):
        np.testing.assert_array_equal(axpy(2.0, np.array([1.0, 2.0]), np.array([1.0, 1.0])), [3.0, 5.0])

    def test_dimension_error_is_value_error(self):
        with pytest.raises(ValueError):
            matmul(np.ones((2, 3)), np.ones((4, 1)))
