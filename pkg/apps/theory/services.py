"""
Theory services: evolve the recursion, evaluate bounds, check domination.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from apps.core.exceptions import ConfigurationError, UnsupportedModelError
from apps.core.utils import log_uniform
from apps.engine.schedules import ConstantStep, TheoremDecayStep
from .bounds import (
    BoundInstance,
    ConstantError,
    GeometricError,
    LemmaKind,
    LogOverKError,
    ZeroError,
    check_preconditions,
    closed_form,
    limit_radius,
)

logger = logging.getLogger(__name__)

# Limsup is read over the last tenth of a run.
LIMSUP_WINDOW = 0.1
LIMSUP_TOL = 1e-6
# Probability of drawing an exact zero for sigma, D0 and the error constants.
ZERO_PROBABILITY = 0.1


@dataclass(frozen=True)
class DominationReport:
    kind: str
    holds: bool
    first_violation: int = None
    max_ratio: float = 0.0
    horizon: int = 0

    def as_dict(self):
        return {
            'kind': str(self.kind),
            'holds': self.holds,
            'first_violation': self.first_violation,
            'max_ratio': self.max_ratio,
            'horizon': self.horizon,
        }


@dataclass(frozen=True)
class EnvelopeReport:
    """Realized ||e_k||_F and its bound M ||x_{k-1} - x*|| (1 + 2 sqrt(p) (kappa + 1)^2), k = 1..K."""
    ks: np.ndarray
    realized: np.ndarray
    envelope: np.ndarray

    @property
    def holds(self):
        return bool(np.all(self.realized <= self.envelope * (1.0 + 1e-9) + 1e-15))


class TheoryService:
    """Deterministic bound business logic service."""

    @staticmethod
    def recursion_evolve(instance, horizon):
        """D_0^2 .. D_K^2 of the recursion taken with equality."""
        instance.check_admissible()
        etas = instance.schedule.sequence(horizon).tolist()
        errors = instance.error.sequence(horizon).tolist()
        mu = instance.mu
        noise = 2.0 * instance.sigma ** 2

        out = [0.0] * (horizon + 1)
        d2 = instance.D0 ** 2
        out[0] = d2
        for k in range(horizon):
            eta = etas[k]
            b = errors[k]
            d2 = (1.0 - mu * eta) * d2 + 2.0 * eta * eta * (b * b + noise) + 2.0 * eta * b * math.sqrt(d2)
            out[k + 1] = d2
        return np.asarray(out)

    @staticmethod
    def lemma_bound(kind, instance, k):
        """Closed-form bound on D_k^2 for the given lemma (vectorized over k)."""
        check_preconditions(kind, instance)
        bound = closed_form(kind, instance, k)
        return float(bound) if np.ndim(bound) == 0 else bound

    @staticmethod
    def general_estimate(mu, kappa, sigma2, eta, M, p):
        """Noise-ball radius (squared) of the derivatives under a constant step."""
        instance = BoundInstance(
            mu=mu, L=mu * kappa, sigma=math.sqrt(sigma2), D0=0.0,
            schedule=ConstantStep(eta), M=M, p=p,
        )
        return TheoryService.lemma_bound(LemmaKind.T1_GENERAL, instance, 0)

    @staticmethod
    def verify_domination(kind, instance, horizon, slack=None):
        """
        Compare the equality recursion with the lemma's bound for k <= horizon.
        The limsup lemma is checked on the tail of the run against its limit radius.
        """
        kind = LemmaKind(kind)
        if kind == LemmaKind.T1_GENERAL:
            raise ConfigurationError('the noise-ball bound is not a bound on the recursion')
        if slack is None:
            slack = settings.PIGGYBACK['LEMMA_SLACK']
        check_preconditions(kind, instance)
        d2 = TheoryService.recursion_evolve(instance, horizon)

        if kind == LemmaKind.C1_LIMSUP:
            return TheoryService._verify_limsup(instance, d2, horizon)

        bound = closed_form(kind, instance, np.arange(horizon + 1))
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(bound > 0, d2 / np.where(bound > 0, bound, 1.0),
                             np.where(d2 > 0, np.inf, 0.0))
        violated = d2 > bound * (1.0 + slack)
        first = int(np.argmax(violated)) if violated.any() else None
        if first is not None:
            logger.warning(f'{kind} bound violated at k={first}: {d2[first]!r} > {bound[first]!r}')
        return DominationReport(
            kind=kind, holds=first is None, first_violation=first,
            max_ratio=float(np.max(ratio)), horizon=horizon,
        )

    @staticmethod
    def _verify_limsup(instance, d2, horizon):
        B = float(instance.error.sequence(1)[0]) if horizon else 0.0
        delta = limit_radius(instance.mu, instance.schedule.eta, B, instance.sigma)
        start = int(horizon * (1.0 - LIMSUP_WINDOW))
        tail = np.sqrt(d2[start:])
        limsup = float(np.max(tail))
        above = np.flatnonzero(tail > delta + LIMSUP_TOL)
        first = int(start + above[0]) if above.size else None
        if delta > 0:
            max_ratio = limsup / delta
        else:
            max_ratio = 0.0 if limsup == 0 else math.inf
        return DominationReport(
            kind=LemmaKind.C1_LIMSUP, holds=first is None, first_violation=first,
            max_ratio=max_ratio, horizon=horizon,
        )

    @staticmethod
    def random_instance(kind, rng):
        """
        Draw an admissible instance for the lemma: mu log-uniform on [0.01, 1],
        kappa log-uniform on [1, 100] ([1, 10] for the limsup lemma), sigma and
        D0 zero with probability 0.1 and log-uniform on [1e-3, 10] otherwise.
        """
        kind = LemmaKind(kind)

        def constant():
            if rng.random() < ZERO_PROBABILITY:
                return 0.0
            return log_uniform(rng, 1e-3, 10.0)

        mu = log_uniform(rng, 0.01, 1.0)
        kappa = log_uniform(rng, 1.0, 10.0 if kind == LemmaKind.C1_LIMSUP else 100.0)
        L = mu * kappa
        sigma = constant()
        D0 = constant()
        eta = mu / (4.0 * L * L)

        if kind == LemmaKind.C1_LIMSUP:
            return BoundInstance(mu, L, sigma, D0, ConstantStep(eta), ConstantError(constant()))
        if kind == LemmaKind.C2_ITERATES:
            return BoundInstance(mu, L, sigma, D0, TheoremDecayStep.for_constants(mu, L), ZeroError())
        if kind == LemmaKind.C3_DERIVATIVES:
            error = LogOverKError(constant(), constant(), L / mu)
            return BoundInstance(mu, L, sigma, D0, TheoremDecayStep.for_constants(mu, L), error)
        if kind == LemmaKind.C4_LINEAR:
            error = GeometricError(constant(), 1.0 - mu * eta / 2.0)
            return BoundInstance(mu, L, 0.0, D0, ConstantStep(eta), error)
        raise ConfigurationError(f'no random instances for {kind}')

    @staticmethod
    def error_envelope(problem, oracle, trajectory, theta):
        """
        Realized error term e_{k+1} = G(x_k, D_k) - G(x*, D_k), with
        G(x, D) = hess_xx f(x; xi_{k+1}) D + hess_xtheta f(x; xi_{k+1}),
        and its Hessian-Lipschitz envelope along a stride-1 trajectory.
        """
        if oracle.M is None:
            raise UnsupportedModelError(problem.kind, 'a Hessian Lipschitz constant')
        num_iters = trajectory.num_iters
        if len(trajectory) != num_iters + 1:
            raise ConfigurationError('error envelope needs a trajectory recorded with stride 1',
                                     field='stride')

        theta = np.asarray(theta, dtype=np.float64)
        radius = 1.0 + 2.0 * math.sqrt(problem.p) * (oracle.kappa + 1.0) ** 2
        realized = np.empty(num_iters)
        envelope = np.empty(num_iters)
        for k in range(num_iters):
            x, D, xi = trajectory.xs[k], trajectory.Ds[k], trajectory.samples[k]
            _, at_iterate = problem.jacobian_direction(x, theta, xi, D)
            _, at_solution = problem.jacobian_direction(oracle.x_star, theta, xi, D)
            realized[k] = np.linalg.norm(at_iterate - at_solution)
            envelope[k] = oracle.M * np.linalg.norm(x - oracle.x_star) * radius

        return EnvelopeReport(ks=np.arange(1, num_iters + 1), realized=realized, envelope=envelope)
