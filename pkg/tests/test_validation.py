# ABOUTME: Unit tests for validation.py module.
# ABOUTME: Tests the error hierarchy and matrix input validators.

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from validation import (
    ConditioningError,
    ConfigError,
    ConsistencyError,
    DegenerateChannelError,
    DomainError,
    InfeasibleStructureError,
    NotPSDError,
    NumericalError,
    ValidationError,
    as_matrix,
    hermitian_part,
    is_hermitian,
    require_positive,
    require_psd,
    require_shape,
    require_square,
)


class TestErrorHierarchy:
    """Tests for the exception classes."""

    @pytest.mark.parametrize("cls", [NotPSDError, DomainError, ConfigError])
    def test_input_errors_are_validation_errors(self, cls):
        assert issubclass(cls, ValidationError)

    @pytest.mark.parametrize(
        "cls",
        [ConditioningError, DegenerateChannelError, InfeasibleStructureError, ConsistencyError],
    )
    def test_numerical_errors(self, cls):
        assert issubclass(cls, NumericalError)
        assert not issubclass(cls, ValidationError)

    def test_conditioning_error_keeps_eigenvalue(self):
        err = ConditioningError("singular", smallest_eigenvalue=1e-15)
        assert err.smallest_eigenvalue == 1e-15
        assert str(err) == "singular"


class TestAsMatrix:
    """Tests for matrix coercion."""

    def test_converts_to_complex(self):
        result = as_matrix([[1, 2], [3, 4]])
        assert result.dtype == complex
        assert result.shape == (2, 2)

    def test_rejects_vector(self):
        with pytest.raises(ValidationError, match="2-D"):
            as_matrix([1.0, 2.0], "h_bar")

    def test_rejects_empty(self):
        with pytest.raises(ValidationError, match="non-empty"):
            as_matrix(np.zeros((0, 2)))

    def test_rejects_inf(self):
        with pytest.raises(ValidationError, match="W contains non-finite"):
            as_matrix([[np.inf]], "W")


class TestShapeChecks:
    """Tests for shape validators."""

    def test_square_passes(self):
        require_square(np.eye(3))

    def test_square_fails(self):
        with pytest.raises(ValidationError, match="must be square"):
            require_square(np.ones((2, 3)), "sigma")

    def test_shape_fails_with_name(self):
        with pytest.raises(ValidationError, match="psi must have shape"):
            require_shape(np.eye(2), (3, 3), "psi")


class TestHermitianChecks:
    """Tests for Hermitian and PSD checks."""

    def test_hermitian_true(self):
        assert is_hermitian(np.array([[2, 1j], [-1j, 3]]))

    def test_hermitian_false(self):
        assert not is_hermitian(np.array([[2, 1j], [1j, 3]]))

    def test_small_asymmetry_tolerated(self):
        assert is_hermitian(np.array([[1.0, 1e-12], [0.0, 1.0]]))

    def test_psd_rejects_negative(self):
        with pytest.raises(NotPSDError, match="sigma is not positive semidefinite"):
            require_psd(np.diag([1.0, -1.0]), "sigma")

    def test_psd_accepts_zero(self):
        require_psd(np.zeros((3, 3)))

    def test_hermitian_part(self):
        a = np.array([[1, 2], [0, 1]], dtype=complex)
        np.testing.assert_allclose(hermitian_part(a), [[1, 1], [1, 1]])


class TestRequirePositive:
    """Tests for scalar positivity."""

    def test_positive_passes(self):
        require_positive(0.5, "noise_var")

    @pytest.mark.parametrize("value", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects(self, value):
        with pytest.raises(ValidationError, match="power_budget must be positive"):
            require_positive(value, "power_budget")
