"""
Tests for theory services.
"""
import numpy as np
import pytest

from apps.core.exceptions import ConfigurationError, UnsupportedModelError
from apps.engine.schedules import ConstantStep, TheoremDecayStep
from apps.engine.services import EngineService
from apps.engine.states import Trajectory
from apps.experiments.services import ExperimentConfig, ExperimentService
from apps.sampling.streams import SampleStream
from apps.theory.bounds import (
    BoundInstance,
    ConstantError,
    GeometricError,
    LemmaKind,
    LogOverKError,
    ZeroError,
)
from apps.theory.services import TheoryService

DOMINATED_KINDS = [LemmaKind.C2_ITERATES, LemmaKind.C3_DERIVATIVES, LemmaKind.C4_LINEAR]


class TestRecursionEvolve:
    """Tests for TheoryService.recursion_evolve."""

    def test_first_step(self):
        """Test mu=L=1, eta=0.1, sigma=1, D0=0, B=0 gives D_1^2 = 0.04."""
        instance = BoundInstance(mu=1.0, L=1.0, sigma=1.0, D0=0.0, schedule=ConstantStep(0.1))
        d2 = TheoryService.recursion_evolve(instance, 1)
        np.testing.assert_allclose(d2, [0.0, 0.04])

    def test_noise_free_contraction(self):
        instance = BoundInstance(mu=1.0, L=1.0, sigma=0.0, D0=2.0, schedule=ConstantStep(0.1))
        d2 = TheoryService.recursion_evolve(instance, 50)
        np.testing.assert_allclose(d2, 4.0 * 0.9 ** np.arange(51), rtol=1e-12)

    def test_limit(self):
        """Test the constant-step recursion settles at 4 eta sigma^2 / mu = 0.4."""
        instance = BoundInstance(mu=1.0, L=1.0, sigma=1.0, D0=0.0, schedule=ConstantStep(0.1))
        d2 = TheoryService.recursion_evolve(instance, 10_000)
        tail = d2[-1000:]
        assert np.max(tail) <= 0.4 + 1e-12
        assert tail[-1] == pytest.approx(0.4, rel=1e-9)

    def test_inadmissible_step(self):
        instance = BoundInstance(mu=1.0, L=1.0, sigma=1.0, D0=0.0, schedule=ConstantStep(0.5))
        with pytest.raises(ConfigurationError):
            TheoryService.recursion_evolve(instance, 10)


class TestLemmaBound:
    """Tests for closed-form bounds."""

    def test_iterates_at_zero(self):
        instance = BoundInstance(mu=1.0, L=2.0, sigma=0.0, D0=1.0,
                                 schedule=TheoremDecayStep(mu=1.0, L=2.0))
        assert TheoryService.lemma_bound(LemmaKind.C2_ITERATES, instance, 0) == pytest.approx(1.0)

    def test_linear_at_zero(self):
        eta = 1 / 16
        instance = BoundInstance(mu=1.0, L=2.0, sigma=0.0, D0=3.0, schedule=ConstantStep(eta),
                                 error=GeometricError(1.0, 1.0 - eta / 2))
        assert TheoryService.lemma_bound(LemmaKind.C4_LINEAR, instance, 0) == pytest.approx(9.0)

    def test_general_without_noise(self):
        assert TheoryService.general_estimate(mu=0.1, kappa=5.0, sigma2=0.0, eta=1e-3, M=2.0, p=4) == 0.0

    def test_general_scales_with_step(self):
        small = TheoryService.general_estimate(mu=0.1, kappa=5.0, sigma2=1.0, eta=1e-3, M=0.0, p=4)
        large = TheoryService.general_estimate(mu=0.1, kappa=5.0, sigma2=1.0, eta=2e-3, M=0.0, p=4)
        assert small == pytest.approx(4 * 1e-3 / 0.1)
        assert large == pytest.approx(2 * small)

    def test_iterates_scaled_bound_non_decreasing(self):
        """Test (k + 8 kappa^2) times the iterate bound never decreases."""
        mu, L = 0.1, 0.5
        instance = BoundInstance(mu=mu, L=L, sigma=1.0, D0=1.0, schedule=TheoremDecayStep(mu=mu, L=L))
        ks = np.arange(0, 10_000)
        scaled = TheoryService.lemma_bound(LemmaKind.C2_ITERATES, instance, ks) * (ks + 8 * (L / mu) ** 2)
        assert np.all(np.diff(scaled) >= 0)

    def test_mismatched_schedule(self):
        instance = BoundInstance(mu=1.0, L=2.0, sigma=0.0, D0=1.0, schedule=ConstantStep(0.01))
        with pytest.raises(ConfigurationError):
            TheoryService.lemma_bound(LemmaKind.C2_ITERATES, instance, 3)


class TestVerifyDomination:
    """Tests for TheoryService.verify_domination."""

    @pytest.mark.parametrize('kind', DOMINATED_KINDS)
    def test_random_instances(self, kind):
        rng = np.random.default_rng(7)
        for _ in range(10):
            instance = TheoryService.random_instance(kind, rng)
            report = TheoryService.verify_domination(kind, instance, 10_000)
            assert report.holds, instance.as_dict()

    def test_limsup_random_instances(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            instance = TheoryService.random_instance(LemmaKind.C1_LIMSUP, rng)
            report = TheoryService.verify_domination(LemmaKind.C1_LIMSUP, instance, 100_000)
            assert report.holds, instance.as_dict()

    def test_linear_without_error_is_tight_at_start(self):
        eta = 1 / 16
        instance = BoundInstance(mu=1.0, L=2.0, sigma=0.0, D0=1.0, schedule=ConstantStep(eta),
                                 error=GeometricError(0.0, 1.0 - eta / 2))
        report = TheoryService.verify_domination(LemmaKind.C4_LINEAR, instance, 1000)
        assert report.holds
        assert report.max_ratio == pytest.approx(1.0)

    def test_iterates_without_noise(self):
        instance = BoundInstance(mu=0.5, L=1.0, sigma=0.0, D0=1.0,
                                 schedule=TheoremDecayStep(mu=0.5, L=1.0), error=ZeroError())
        report = TheoryService.verify_domination(LemmaKind.C2_ITERATES, instance, 5000)
        assert report.holds
        assert report.max_ratio <= 1.0 + 1e-12

    def test_derivatives_instance(self):
        mu, L = 0.2, 1.0
        instance = BoundInstance(mu=mu, L=L, sigma=0.5, D0=2.0, schedule=TheoremDecayStep(mu=mu, L=L),
                                 error=LogOverKError(1.0, 0.5, L / mu))
        assert TheoryService.verify_domination(LemmaKind.C3_DERIVATIVES, instance, 20_000).holds

    def test_limsup_with_error(self):
        instance = BoundInstance(mu=1.0, L=1.0, sigma=0.3, D0=5.0, schedule=ConstantStep(0.2),
                                 error=ConstantError(0.1))
        report = TheoryService.verify_domination(LemmaKind.C1_LIMSUP, instance, 10_000)
        assert report.holds
        assert report.max_ratio <= 1.0 + 1e-6

    def test_general_bound_is_not_checked(self):
        instance = BoundInstance(mu=1.0, L=1.0, sigma=1.0, D0=0.0, schedule=ConstantStep(0.1), M=1.0, p=2)
        with pytest.raises(ConfigurationError):
            TheoryService.verify_domination(LemmaKind.T1_GENERAL, instance, 10)

    @pytest.mark.slow
    @pytest.mark.parametrize('kind', list(LemmaKind)[:4])
    def test_acceptance_scale(self, kind):
        rng = np.random.default_rng(2024)
        horizon = 1_000_000 if kind == LemmaKind.C1_LIMSUP else 100_000
        for _ in range(100):
            instance = TheoryService.random_instance(kind, rng)
            assert TheoryService.verify_domination(kind, instance, horizon).holds


class TestRandomInstance:
    """Tests for random instance generation."""

    @pytest.mark.parametrize('kind', list(LemmaKind)[:4])
    def test_admissible(self, kind):
        rng = np.random.default_rng(0)
        for _ in range(50):
            instance = TheoryService.random_instance(kind, rng)
            instance.check_admissible()
            assert 1.0 - 1e-12 <= instance.kappa <= 100.0 * (1 + 1e-12)
            assert 0.01 * (1 - 1e-12) <= instance.mu <= 1.0 + 1e-12

    def test_reproducible(self):
        first = TheoryService.random_instance(LemmaKind.C3_DERIVATIVES, np.random.default_rng(5))
        second = TheoryService.random_instance(LemmaKind.C3_DERIVATIVES, np.random.default_rng(5))
        assert first.as_dict() == second.as_dict()

    def test_general_has_no_random_instances(self):
        with pytest.raises(ConfigurationError):
            TheoryService.random_instance(LemmaKind.T1_GENERAL, np.random.default_rng(0))


class TestErrorEnvelope:
    """Tests for the realized Jacobian-update error and its envelope."""

    def _trajectory(self, problem, theta, oracle, num_iters=2000):
        return EngineService.run(problem, theta, ConstantStep(oracle.base_step),
                                 SampleStream(4, problem.m), num_iters)

    def test_quadratic_has_no_error(self, ridge_problem, solved):
        theta, oracle = solved(ridge_problem)
        report = TheoryService.error_envelope(ridge_problem, oracle, self._trajectory(ridge_problem, theta, oracle),
                                              theta)
        assert np.max(report.realized) <= 1e-12
        assert not report.envelope.any()
        assert report.holds

    def test_logistic_within_envelope(self, logistic_problem, solved):
        theta, oracle = solved(logistic_problem)
        trajectory = self._trajectory(logistic_problem, theta, oracle)
        report = TheoryService.error_envelope(logistic_problem, oracle, trajectory, theta)

        assert report.holds
        assert report.realized[0] > 0
        np.testing.assert_array_equal(report.ks, np.arange(1, 2001))

    def test_zero_at_solution(self, logistic_problem, solved):
        theta, oracle = solved(logistic_problem)
        trajectory = Trajectory(
            ks=np.array([0, 1]),
            xs=np.stack([oracle.x_star, oracle.x_star + 0.1]),
            Ds=np.stack([oracle.D_star, oracle.D_star]),
            samples=np.array([3]),
            schedule_id='constant(eta=0.1)',
            seed=0,
            model_id=logistic_problem.model_id,
        )
        report = TheoryService.error_envelope(logistic_problem, oracle, trajectory, theta)
        assert report.realized[0] == 0.0

    def test_strided_trajectory(self, logistic_problem, solved):
        theta, oracle = solved(logistic_problem)
        trajectory = EngineService.run(logistic_problem, theta, ConstantStep(0.1), SampleStream(0, 8), 10, stride=5)
        with pytest.raises(ConfigurationError):
            TheoryService.error_envelope(logistic_problem, oracle, trajectory, theta)

    def test_non_smooth_model(self, make_problem, solved):
        problem = make_problem('huber', huber_delta=1.0)
        theta, oracle = solved(problem)
        trajectory = EngineService.run(problem, theta, ConstantStep(0.1), SampleStream(0, 8), 5)
        with pytest.raises(UnsupportedModelError):
            TheoryService.error_envelope(problem, oracle, trajectory, theta)


@pytest.mark.slow
class TestErrorEnvelopeOnPreset:
    """Acceptance-scale envelope check on the logistic preset."""

    def test_logistic(self):
        """Test every step of a 10^4-step run on the logistic preset stays inside the envelope."""
        config = ExperimentConfig.from_data({'preset': 'fig2-logistic', 'seed': 0, 'replications': 1})
        problem, theta, oracle = ExperimentService.prepare(config)
        trajectory = EngineService.run(problem, theta, ConstantStep(oracle.base_step),
                                       SampleStream(0, problem.m), 10_000)
        report = TheoryService.error_envelope(problem, oracle, trajectory, theta)

        assert (problem.m, problem.d) == (100, 10)
        assert len(report.ks) == 10_000
        assert report.holds
