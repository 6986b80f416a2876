"""Analytic gradients against central finite differences."""

import numpy as np
import pytest

from src.models.autoencoder import Gradients, LossKind, gradients
from src.training.gradcheck import (
    DEFAULT_TOLERANCE,
    compare_gradients,
    gradcheck_variants,
    run_gradcheck,
)
from src.utils.errors import ConfigError


def perturbed_gradients(variant, params, X, loss_kind, X_tilde):
    """Correct gradients with one W entry knocked off"""
    grads = gradients(variant, params, X, loss_kind=loss_kind, X_tilde=X_tilde)
    W = grads.W.copy()
    W[3, 5] += 1e-3
    return Gradients(W, grads.b, grads.c, grads.loss, grads.reconstruction, grads.penalty)


class TestGradientMatrix:

    def test_every_variant_activation_and_loss_passes(self):
        report = run_gradcheck(d_v=20, d_h=7, restarts=3, seed=0)
        assert len(report.cases) == 4 * 2 * 2 * 3
        assert report.passed, report.to_dict()["worst"]
        assert report.worst.result.max_relative_error < DEFAULT_TOLERANCE

    @pytest.mark.parametrize("name", ["AE", "DAE", "CAE", "CDAE"])
    def test_single_variant_other_seed(self, name):
        report = run_gradcheck(d_v=12, d_h=5, variants=[name], restarts=2, seed=17)
        assert {case.variant for case in report.cases} == {name}
        assert report.passed

    def test_perturbed_gradient_is_located(self):
        report = run_gradcheck(d_v=20, d_h=7, variants=["AE"], restarts=1,
                               gradient_fn=perturbed_gradients)
        assert not report.passed
        worst = report.worst.result
        assert worst.block == "W"
        assert worst.index == (3, 5)

    def test_below_floating_point_floor_fails(self):
        report = run_gradcheck(d_v=20, d_h=7, restarts=1, tolerance=1e-12)
        assert not report.passed

    def test_report_document(self):
        doc = run_gradcheck(d_v=6, d_h=3, variants=["cae"], restarts=1).to_dict()
        assert doc["cases"] == 4
        assert doc["worst"]["variant"] == "CAE"
        assert set(doc["worst"]) >= {"block", "index", "relative_error", "activation", "loss"}

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            run_gradcheck(variants=["VAE"], restarts=1)


class TestCompare:

    def test_identical_gradients_have_zero_error(self):
        g = Gradients(np.ones((2, 3)), np.ones(2), np.ones(3), 0.0)
        result = compare_gradients(g, {"W": np.ones((2, 3)), "b": np.ones(2), "c": np.ones(3)})
        assert result.max_relative_error == 0.0

    def test_small_entries_are_measured_against_their_block(self):
        W = np.array([[1.0, 2e-10]])
        numeric = {"W": np.array([[1.0, 1e-10]]), "b": np.ones(1), "c": np.ones(2)}
        result = compare_gradients(Gradients(W, np.ones(1), np.ones(2), 0.0), numeric)
        assert result.max_relative_error == pytest.approx(1e-10)
        assert result.index == (0, 1)

    def test_catalog_uses_small_gaussian_noise(self):
        catalog = gradcheck_variants()
        assert catalog["DAE"].corruption.sigma == 0.1
        assert catalog["CDAE"].penalty_weight == 0.1
        assert catalog["AE"].corruption.is_identity

    def test_loss_kinds_are_both_covered(self):
        report = run_gradcheck(d_v=5, d_h=2, variants=["AE"], restarts=1)
        assert {case.loss for case in report.cases} == {k.value for k in LossKind}
