# ABOUTME: Unit tests for objectives.py module.
# ABOUTME: Tests objective construction, rotations and the scalar reductions g(gamma).

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from linalg_core import dft_matrix
from objectives import (
    OBJECTIVE_NAMES,
    Capacity,
    MaxMSE,
    WeightedMSE,
    WeightedSumRate,
    evaluate_objective,
    make_objective,
    rotation_matrix,
    scalar_objective,
)
from validation import DomainError, NotPSDError, ValidationError


class TestConstruction:
    """Tests for objective construction and validation."""

    def test_weighted_mse_rejects_indefinite(self):
        with pytest.raises(NotPSDError, match="W is not positive semidefinite"):
            WeightedMSE(w=np.diag([1.0, -0.2]))

    def test_weighted_mse_weights_sorted(self):
        obj = WeightedMSE(w=np.diag([0.26, 0.3, 0.26, 0.3]))
        np.testing.assert_allclose(obj.weights, [0.3, 0.3, 0.26, 0.26])

    def test_rate_weights_must_be_sorted(self):
        with pytest.raises(ValidationError, match="sorted non-increasing"):
            WeightedSumRate(v=[1.0, 2.0])

    def test_rate_weights_must_be_positive(self):
        with pytest.raises(ValidationError, match="positive"):
            WeightedSumRate(v=[1.0, 0.0])

    @pytest.mark.parametrize("kind", OBJECTIVE_NAMES)
    def test_make_objective_names(self, kind):
        assert make_objective(kind, 3).name == kind

    def test_make_objective_weights_on_diagonal(self):
        obj = make_objective("weighted_mse", 2, weights=[0.7, 0.2])
        np.testing.assert_allclose(obj.w, np.diag([0.7, 0.2]))

    def test_make_objective_wrong_weight_count(self):
        with pytest.raises(ValidationError, match="weights needs 3 entries"):
            make_objective("weighted_mse", 3, weights=[1.0, 1.0])

    def test_make_objective_unknown(self):
        with pytest.raises(ValidationError, match="unknown objective 'ber'"):
            make_objective("ber", 2)


class TestRotationMatrix:
    """Tests for the objective-specific rotation U_Omega."""

    def test_capacity_identity(self):
        np.testing.assert_allclose(rotation_matrix(Capacity(), 3), np.eye(3))

    def test_sum_rate_identity(self):
        np.testing.assert_allclose(rotation_matrix(WeightedSumRate(v=[2.0, 1.0]), 2), np.eye(2))

    def test_max_mse_dft(self):
        np.testing.assert_allclose(rotation_matrix(MaxMSE(), 4), dft_matrix(4))

    def test_weighted_mse_eigenvectors(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        obj = WeightedMSE(w=a @ a.conj().T)
        u = rotation_matrix(obj, 3)
        d = u.conj().T @ obj.w @ u
        np.testing.assert_allclose(d, np.diag(obj.weights), atol=1e-10)

    def test_weighted_mse_diagonal_weights_identity(self):
        obj = WeightedMSE(w=np.diag([0.3, 0.3, 0.26, 0.26]))
        np.testing.assert_allclose(rotation_matrix(obj, 4), np.eye(4))

    def test_size_mismatch(self):
        with pytest.raises(ValidationError, match="expected 3x3"):
            rotation_matrix(WeightedMSE(w=np.eye(2)), 3)


class TestScalarObjective:
    """Tests for g(gamma)."""

    def test_weighted_mse(self):
        obj = WeightedMSE(w=np.diag([2.0, 1.0]))
        assert scalar_objective(obj, [0.5, 0.25]) == pytest.approx(2 * 0.5 + 0.75)

    def test_max_mse(self):
        assert scalar_objective(MaxMSE(), [0.8, 0.4]) == pytest.approx(0.4)

    def test_capacity(self):
        assert scalar_objective(Capacity(), [0.75, 0.5]) == pytest.approx(-3.0)

    def test_weighted_sum_rate(self):
        obj = WeightedSumRate(v=[2.0, 1.0])
        assert scalar_objective(obj, [0.75, 0.5]) == pytest.approx(2 * -2.0 - 1.0)

    def test_unsorted_rejected(self):
        with pytest.raises(ValidationError, match="sorted non-increasing"):
            scalar_objective(MaxMSE(), [0.2, 0.5])

    def test_out_of_range_rejected(self):
        with pytest.raises(DomainError, match=r"\[0, 1\]"):
            scalar_objective(MaxMSE(), [1.5, 0.5])

    def test_rate_at_one_rejected(self):
        with pytest.raises(DomainError, match="below 1"):
            scalar_objective(Capacity(), [1.0, 0.5])

    def test_mse_accepts_one(self):
        assert scalar_objective(MaxMSE(), [1.0, 1.0]) == pytest.approx(0.0)

    @pytest.mark.parametrize(
        "obj",
        [WeightedMSE(w=np.diag([0.5, 0.3, 0.2])), Capacity(), MaxMSE(), WeightedSumRate(v=[3.0, 2.0, 1.0])],
        ids=lambda o: o.name,
    )
    def test_monotone_in_gamma(self, obj):
        rng = np.random.default_rng(1)
        for _ in range(200):
            gamma = np.sort(rng.uniform(0.0, 0.9, 3))[::-1]
            bumped = np.sort(gamma + rng.uniform(0.0, 0.05, 3))[::-1]
            assert scalar_objective(obj, bumped) <= scalar_objective(obj, gamma) + 1e-12

    @pytest.mark.parametrize("obj", [Capacity(), MaxMSE()], ids=lambda o: o.name)
    def test_schur_concave(self, obj):
        # An equalizing transfer between adjacent entries must not decrease g.
        rng = np.random.default_rng(2)
        for _ in range(200):
            gamma = np.sort(rng.uniform(0.0, 0.9, 3))[::-1]
            i = rng.integers(0, 2)
            delta = rng.uniform(0.0, 0.5) * (gamma[i] - gamma[i + 1])
            moved = gamma.copy()
            moved[i] -= delta
            moved[i + 1] += delta
            assert scalar_objective(obj, moved) >= scalar_objective(obj, gamma) - 1e-12


class TestEvaluateObjective:
    """Tests for f(Phi) on full MSE matrices."""

    def test_weighted_mse(self):
        obj = WeightedMSE(w=np.diag([0.3, 0.3, 0.26, 0.26]))
        assert evaluate_objective(obj, np.eye(4)) == pytest.approx(1.12)

    def test_capacity(self):
        assert evaluate_objective(Capacity(), np.diag([0.5, 0.25])) == pytest.approx(-3.0)

    def test_max_mse(self):
        phi = np.array([[0.2, 0.1j], [-0.1j, 0.6]])
        assert evaluate_objective(MaxMSE(), phi) == pytest.approx(0.6)

    def test_weighted_sum_rate_pairs_largest_weight_with_smallest_mse(self):
        obj = WeightedSumRate(v=[2.0, 1.0])
        assert evaluate_objective(obj, np.diag([0.5, 0.25])) == pytest.approx(2 * -2.0 + -1.0)

    def test_diagonal_phi_matches_scalar_form(self):
        gamma = np.array([0.9, 0.6, 0.3])
        phi = np.diag(1 - gamma)
        for obj in [WeightedMSE(w=np.diag([0.5, 0.3, 0.2])), Capacity(), WeightedSumRate(v=[3.0, 2.0, 1.0])]:
            assert evaluate_objective(obj, phi) == pytest.approx(scalar_objective(obj, gamma))
