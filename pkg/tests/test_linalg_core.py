# ABOUTME: Unit tests for linalg_core.py module.
# ABOUTME: Tests Hermitian roots, ordered decompositions, DFT and Kronecker sampling.

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from linalg_core import (
    dft_matrix,
    hermitian_inv_sqrt,
    hermitian_sqrt,
    ordered_eig_hermitian,
    ordered_svd,
    sample_kronecker_gaussian,
)
from validation import ConditioningError, NotPSDError, ValidationError


def random_complex(rng, m, n):
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


class TestHermitianSqrt:
    """Tests for the Hermitian PSD square root."""

    def test_identity(self):
        np.testing.assert_allclose(hermitian_sqrt(np.eye(4)), np.eye(4), atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(hermitian_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)

    def test_random_psd_reconstruction(self):
        rng = np.random.default_rng(1)
        b = random_complex(rng, 5, 5)
        a = b.conj().T @ b
        s = hermitian_sqrt(a)
        assert np.linalg.norm(s @ s - a) / np.linalg.norm(a) < 1e-9
        np.testing.assert_allclose(s, s.conj().T, atol=1e-12)

    def test_tiny_negative_eigenvalue_clipped(self):
        s = hermitian_sqrt(np.diag([1.0, -1e-14]))
        np.testing.assert_allclose(s, np.diag([1.0, 0.0]), atol=1e-12)

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(NotPSDError, match="positive semidefinite"):
            hermitian_sqrt(np.diag([1.0, -0.5]))

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValidationError, match="not Hermitian"):
            hermitian_sqrt(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError, match="non-finite"):
            hermitian_sqrt(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestHermitianInvSqrt:
    """Tests for the inverse Hermitian square root."""

    def test_identity(self):
        np.testing.assert_allclose(hermitian_inv_sqrt(np.eye(3)), np.eye(3), atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(
            hermitian_inv_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-14
        )

    def test_random_pd(self):
        rng = np.random.default_rng(2)
        b = random_complex(rng, 4, 4)
        a = b @ b.conj().T + 0.1 * np.eye(4)
        t = hermitian_inv_sqrt(a)
        assert np.linalg.norm(t @ a @ t - np.eye(4)) < 1e-9

    def test_singular_reports_smallest_eigenvalue(self):
        with pytest.raises(ConditioningError, match="smallest eigenvalue") as exc_info:
            hermitian_inv_sqrt(np.diag([1.0, 0.0]))
        assert exc_info.value.smallest_eigenvalue == pytest.approx(0.0, abs=1e-15)

    def test_large_spread_accepted(self):
        t = hermitian_inv_sqrt(np.diag([1e13, 0.5]))
        np.testing.assert_allclose(np.diag(t).real, [1e13**-0.5, 0.5**-0.5], rtol=1e-12)

    def test_threshold_is_absolute(self):
        with pytest.raises(ConditioningError):
            hermitian_inv_sqrt(np.diag([1.0, 1e-13]))


class TestOrderedSVD:
    """Tests for the ordered SVD."""

    def test_reorders_singular_values(self):
        svd = ordered_svd(np.diag([1.0, 3.0]))
        np.testing.assert_allclose(svd.singular_values, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(svd.u), [[0, 1], [1, 0]], atol=1e-14)

    def test_identity(self):
        np.testing.assert_allclose(ordered_svd(np.eye(3)).singular_values, np.ones(3))

    @pytest.mark.parametrize("shape", [(4, 4), (3, 5), (5, 2)])
    def test_reconstruction(self, shape):
        rng = np.random.default_rng(3)
        a = random_complex(rng, *shape)
        svd = ordered_svd(a)
        r = len(svd.singular_values)
        rebuilt = svd.u[:, :r] @ np.diag(svd.singular_values) @ svd.v[:, :r].conj().T
        assert np.linalg.norm(rebuilt - a) / np.linalg.norm(a) < 1e-10
        assert np.all(np.diff(svd.singular_values) <= 0)

    def test_factors_are_unitary(self):
        rng = np.random.default_rng(4)
        svd = ordered_svd(random_complex(rng, 3, 5))
        np.testing.assert_allclose(svd.u.conj().T @ svd.u, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(svd.v.conj().T @ svd.v, np.eye(5), atol=1e-12)

    def test_phase_convention(self):
        rng = np.random.default_rng(5)
        u = ordered_svd(random_complex(rng, 4, 4)).u
        for j in range(4):
            idx = np.argmax(np.abs(u[:, j]))
            assert abs(u[idx, j].imag) < 1e-12
            assert u[idx, j].real > 0

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        a = random_complex(rng, 4, 3)
        first, second = ordered_svd(a), ordered_svd(a)
        assert np.array_equal(first.u, second.u)
        assert np.array_equal(first.v, second.v)


class TestOrderedEigHermitian:
    """Tests for the ordered Hermitian eigendecomposition."""

    def test_sorted_descending(self):
        eig = ordered_eig_hermitian(np.diag([1.0, 5.0, 2.0]))
        np.testing.assert_allclose(eig.eigenvalues, [5.0, 2.0, 1.0])

    def test_identity(self):
        np.testing.assert_allclose(ordered_eig_hermitian(np.eye(3)).eigenvalues, np.ones(3))

    def test_identity_keeps_basis(self):
        np.testing.assert_allclose(ordered_eig_hermitian(np.eye(3)).u, np.eye(3))

    def test_reconstruction(self):
        rng = np.random.default_rng(7)
        b = random_complex(rng, 4, 4)
        a = b + b.conj().T
        eig = ordered_eig_hermitian(a)
        rebuilt = eig.u @ np.diag(eig.eigenvalues) @ eig.u.conj().T
        assert np.linalg.norm(rebuilt - a) / np.linalg.norm(a) < 1e-10

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValidationError, match="not Hermitian"):
            ordered_eig_hermitian(np.array([[1.0, 1j], [1j, 1.0]]))


class TestDftMatrix:
    """Tests for the unitary DFT matrix."""

    def test_size_one(self):
        np.testing.assert_allclose(dft_matrix(1), [[1.0]])

    def test_size_two(self):
        expected = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        np.testing.assert_allclose(dft_matrix(2), expected, atol=1e-15)

    def test_entry_formula(self):
        q = dft_matrix(5)
        assert q[2, 3] == pytest.approx(np.exp(-2j * np.pi * 6 / 5) / np.sqrt(5))

    def test_unitary(self):
        q = dft_matrix(8)
        np.testing.assert_allclose(q.conj().T @ q, np.eye(8), atol=1e-12)

    def test_equalizes_diagonal(self):
        q = dft_matrix(4)
        diag = np.diag(q @ np.diag([4.0, 0.0, 0.0, 0.0]) @ q.conj().T)
        np.testing.assert_allclose(diag, np.ones(4), atol=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(ValidationError, match="at least 1"):
            dft_matrix(0)


class TestSampleKroneckerGaussian:
    """Tests for Kronecker-structured complex Gaussian sampling."""

    def test_zero_row_covariance(self):
        rng = np.random.default_rng(8)
        draw = sample_kronecker_gaussian(3, 2, np.zeros((3, 3)), np.eye(2), rng)
        assert draw.shape == (3, 2)
        np.testing.assert_allclose(draw, 0.0)

    def test_unit_variance(self):
        rng = np.random.default_rng(9)
        draws = sample_kronecker_gaussian(2, 2, np.eye(2), np.eye(2), rng, count=50000)
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, rel=0.03)
        assert np.var(draws.real) == pytest.approx(0.5, rel=0.03)

    def test_kronecker_covariance(self):
        rng = np.random.default_rng(10)
        sigma = np.array([[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]])
        psi = np.array([[0.4, 0.1j], [-0.1j, 0.2]])
        draws = sample_kronecker_gaussian(3, 2, sigma, psi, rng, count=100000)
        vecs = draws.reshape(draws.shape[0], -1)
        empirical = vecs.T @ vecs.conj() / vecs.shape[0]
        expected = np.kron(sigma, psi.T)
        assert np.linalg.norm(empirical - expected) / np.linalg.norm(expected) < 0.05

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(11)
        with pytest.raises(ValidationError, match="row_cov must be 2x2"):
            sample_kronecker_gaussian(2, 2, np.eye(3), np.eye(2), rng)

    def test_same_seed_same_draw(self):
        a = sample_kronecker_gaussian(2, 3, np.eye(2), np.eye(3), np.random.default_rng(12))
        b = sample_kronecker_gaussian(2, 3, np.eye(2), np.eye(3), np.random.default_rng(12))
        assert np.array_equal(a, b)
