"""
Tests for bound instances and closed-form lemma bounds.
"""
import math

import numpy as np
import pytest

from apps.core.exceptions import ConfigurationError
from apps.engine.schedules import ConstantStep, InverseKStep, TheoremDecayStep
from apps.theory.bounds import (
    BoundInstance,
    ConstantError,
    GeometricError,
    LemmaKind,
    LogOverKError,
    ZeroError,
    check_preconditions,
    limit_radius,
)


class TestBoundInstance:
    """Tests for BoundInstance validation."""

    def test_invalid_constants(self):
        with pytest.raises(ConfigurationError):
            BoundInstance(mu=0.0, L=1.0, sigma=1.0, D0=0.0, schedule=ConstantStep(0.1))
        with pytest.raises(ConfigurationError):
            BoundInstance(mu=2.0, L=1.0, sigma=1.0, D0=0.0, schedule=ConstantStep(0.1))
        with pytest.raises(ConfigurationError):
            BoundInstance(mu=1.0, L=1.0, sigma=-1.0, D0=0.0, schedule=ConstantStep(0.1))

    def test_step_limit(self):
        instance = BoundInstance(mu=1.0, L=2.0, sigma=0.0, D0=1.0, schedule=ConstantStep(0.1))
        assert instance.step_limit == pytest.approx(1 / 16)
        with pytest.raises(ConfigurationError):
            instance.check_admissible()

    def test_as_dict(self):
        instance = BoundInstance(mu=1.0, L=2.0, sigma=0.5, D0=1.0, schedule=ConstantStep(0.05),
                                 error=ConstantError(0.2))
        data = instance.as_dict()
        assert data['kappa'] == 2.0
        assert data['error'] == {'kind': 'constant', 'B': 0.2}


class TestErrorModels:
    """Tests for the error sequences B_k."""

    def test_geometric(self):
        np.testing.assert_allclose(GeometricError(4.0, 0.25).sequence(3), [2.0, 1.0, 0.5])

    def test_log_over_k(self):
        error = LogOverKError(A=1.0, B=0.0, kappa=1.0)
        np.testing.assert_allclose(error.sequence(2), [1 / math.sqrt(8), 1 / 3])

    def test_zero(self):
        assert not ZeroError().sequence(5).any()


class TestPreconditions:
    """Tests for check_preconditions."""

    def test_iterate_bound_needs_decaying_step(self):
        instance = BoundInstance(mu=1.0, L=2.0, sigma=1.0, D0=1.0, schedule=InverseKStep(c=2.0, u=33.0))
        with pytest.raises(ConfigurationError):
            check_preconditions(LemmaKind.C2_ITERATES, instance)

        matching = BoundInstance(mu=1.0, L=2.0, sigma=1.0, D0=1.0, schedule=InverseKStep(c=2.0, u=32.0))
        check_preconditions(LemmaKind.C2_ITERATES, matching)

    def test_derivative_bound_kappa_must_match(self):
        schedule = TheoremDecayStep(mu=1.0, L=2.0)
        instance = BoundInstance(mu=1.0, L=2.0, sigma=1.0, D0=1.0, schedule=schedule,
                                 error=LogOverKError(1.0, 1.0, kappa=3.0))
        with pytest.raises(ConfigurationError):
            check_preconditions(LemmaKind.C3_DERIVATIVES, instance)

    def test_linear_bound_needs_interpolation(self):
        eta = 0.05
        error = GeometricError(1.0, 1.0 - eta / 2.0)
        noisy = BoundInstance(mu=1.0, L=2.0, sigma=0.1, D0=1.0, schedule=ConstantStep(eta), error=error)
        with pytest.raises(ConfigurationError):
            check_preconditions(LemmaKind.C4_LINEAR, noisy)

        wrong_rho = BoundInstance(mu=1.0, L=2.0, sigma=0.0, D0=1.0, schedule=ConstantStep(eta),
                                  error=GeometricError(1.0, 0.9))
        with pytest.raises(ConfigurationError):
            check_preconditions(LemmaKind.C4_LINEAR, wrong_rho)

    def test_general_needs_M_and_p(self):
        instance = BoundInstance(mu=1.0, L=2.0, sigma=1.0, D0=0.0, schedule=ConstantStep(0.01))
        with pytest.raises(ConfigurationError):
            check_preconditions(LemmaKind.T1_GENERAL, instance)


class TestLimitRadius:
    """Tests for the constant-step fixed point."""

    def test_no_error(self):
        """Test D^2 = 4 eta sigma^2 / mu at B = 0."""
        assert limit_radius(1.0, 0.1, 0.0, 1.0) ** 2 == pytest.approx(0.4)

    def test_is_fixed_point(self):
        mu, eta, B, sigma = 0.5, 0.2, 0.3, 0.7
        delta = limit_radius(mu, eta, B, sigma)
        nxt = (1 - mu * eta) * delta**2 + 2 * eta**2 * (B**2 + 2 * sigma**2) + 2 * eta * B * delta
        assert nxt == pytest.approx(delta**2, rel=1e-12)
