"""
Step-size schedules for the joint recursion.
"""
import math
from dataclasses import dataclass

import numpy as np
from django.db import models

from apps.core.exceptions import ConfigurationError

# Relative tolerance on theorem-mode comparisons, so a step computed as
# exactly mu / (4 L^2) elsewhere is never rejected by rounding.
CHECK_RTOL = 1e-12


class ScheduleKind(models.TextChoices):
    CONSTANT = 'constant', 'Constant'
    INVERSE_K = 'inverse-k', 'c / (k + u)'
    THEOREM_DECAY = 'theorem-decay', '2 / (mu (k + 8 kappa^2))'


def _positive(value, name):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ConfigurationError(f'{name} must be positive and finite, got {value}', field=name)
    return value


class StepSchedule:
    """Base class: positive, non-increasing step sizes eta_0, eta_1, ..."""
    kind = None

    def step_size(self, k):
        raise NotImplementedError

    def sequence(self, num_iters):
        """eta_0 .. eta_{num_iters - 1} as a float64 array."""
        raise NotImplementedError

    @property
    def initial_step(self):
        return self.step_size(0)

    @property
    def schedule_id(self):
        raise NotImplementedError

    def check(self, mu, L):
        """Raise ConfigurationError unless the schedule meets the rate theorem's conditions."""
        raise NotImplementedError

    def as_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantStep(StepSchedule):
    eta: float
    kind = ScheduleKind.CONSTANT

    def __post_init__(self):
        object.__setattr__(self, 'eta', _positive(self.eta, 'eta'))

    def step_size(self, k):
        return self.eta

    def sequence(self, num_iters):
        return np.full(num_iters, self.eta)

    @property
    def schedule_id(self):
        return f'constant(eta={self.eta!r})'

    def check(self, mu, L):
        limit = mu / (4.0 * L * L)
        if self.eta > limit * (1.0 + CHECK_RTOL):
            raise ConfigurationError(
                f'constant step {self.eta!r} exceeds mu/(4L^2) = {limit!r}', field='eta'
            )

    def effective_kappa(self, L):
        """Condition number for which this step equals mu/(4L^2)."""
        return 1.0 / (4.0 * L * self.eta)

    def as_dict(self):
        return {'kind': self.kind.value, 'eta': self.eta}


@dataclass(frozen=True)
class InverseKStep(StepSchedule):
    """eta_k = c / (k + u)."""
    c: float
    u: float
    kind = ScheduleKind.INVERSE_K

    def __post_init__(self):
        object.__setattr__(self, 'c', _positive(self.c, 'c'))
        object.__setattr__(self, 'u', _positive(self.u, 'u'))

    def step_size(self, k):
        return self.c / (k + self.u)

    def sequence(self, num_iters):
        return self.c / (np.arange(num_iters, dtype=np.float64) + self.u)

    @property
    def schedule_id(self):
        return f'inverse-k(c={self.c!r},u={self.u!r})'

    def check(self, mu, L):
        kappa = L / mu
        if self.c < (2.0 / mu) * (1.0 - CHECK_RTOL):
            raise ConfigurationError(f'c = {self.c!r} is below 2/mu = {2.0 / mu!r}', field='c')
        if self.u < 8.0 * kappa * kappa * (1.0 - CHECK_RTOL):
            raise ConfigurationError(
                f'u = {self.u!r} is below 8 kappa^2 = {8.0 * kappa * kappa!r}', field='u'
            )

    def effective_constants(self):
        """
        Constants (mu', kappa', L') for which this schedule is the theorem's
        decaying step: mu' = 2/c, kappa' = sqrt(u/8), L' = mu' kappa'.
        """
        mu = 2.0 / self.c
        kappa = math.sqrt(self.u / 8.0)
        return mu, kappa, mu * kappa

    def as_dict(self):
        return {'kind': self.kind.value, 'c': self.c, 'u': self.u}


@dataclass(frozen=True)
class TheoremDecayStep(InverseKStep):
    """eta_k = 2 / (mu (k + 8 kappa^2)) with kappa = L / mu."""
    c: float = None
    u: float = None
    mu: float = None
    L: float = None
    kind = ScheduleKind.THEOREM_DECAY

    def __post_init__(self):
        mu = _positive(self.mu, 'mu')
        L = _positive(self.L, 'L')
        if L < mu:
            raise ConfigurationError(f'L = {L!r} is below mu = {mu!r}', field='L')
        kappa = L / mu
        object.__setattr__(self, 'mu', mu)
        object.__setattr__(self, 'L', L)
        object.__setattr__(self, 'c', 2.0 / mu)
        object.__setattr__(self, 'u', 8.0 * kappa * kappa)

    @classmethod
    def for_constants(cls, mu, L):
        return cls(mu=mu, L=L)

    @property
    def kappa(self):
        return self.L / self.mu

    @property
    def schedule_id(self):
        return f'theorem-decay(mu={self.mu!r},L={self.L!r})'

    def as_dict(self):
        return {'kind': self.kind.value, 'mu': self.mu, 'L': self.L}


def build_schedule(kind, **params):
    """Build a schedule from its kind and parameters (as validated by ScheduleSerializer)."""
    kind = ScheduleKind(kind)
    if kind == ScheduleKind.CONSTANT:
        return ConstantStep(params['eta'])
    if kind == ScheduleKind.INVERSE_K:
        return InverseKStep(params['c'], params['u'])
    return TheoremDecayStep(mu=params['mu'], L=params['L'])
