"""
Deterministic inexact-SGD recursion inputs and closed-form bounds.

The recursion on D_k^2 (mean-square distance to the target) is

    D_{k+1}^2 = (1 - mu eta_k) D_k^2 + 2 eta_k^2 (B_k^2 + 2 sigma^2) + 2 eta_k B_k D_k

where B_k bounds the root-mean-square error added to each stochastic gradient.
"""
import math
from dataclasses import dataclass

import numpy as np
from django.db import models

from apps.core.exceptions import ConfigurationError
from apps.engine.schedules import CHECK_RTOL, ConstantStep, InverseKStep


class LemmaKind(models.TextChoices):
    C1_LIMSUP = 'c1-limsup', 'Limsup under constant steps'
    C2_ITERATES = 'c2-iterates', '1/k rate of the iterates'
    C3_DERIVATIVES = 'c3-derivatives', 'log^2(k)/k rate of the derivatives'
    C4_LINEAR = 'c4-linear', 'Linear rate under interpolation'
    T1_GENERAL = 't1-general', 'Noise ball of the derivatives'


# Error models

@dataclass(frozen=True)
class ZeroError:
    def sequence(self, num_iters):
        return np.zeros(num_iters)

    def as_dict(self):
        return {'kind': 'zero'}


@dataclass(frozen=True)
class ConstantError:
    B: float

    def sequence(self, num_iters):
        return np.full(num_iters, float(self.B))

    def as_dict(self):
        return {'kind': 'constant', 'B': self.B}


@dataclass(frozen=True)
class LogOverKError:
    """B_k^2 = (A + B log(k + 8 kappa^2)) / (k + 8 kappa^2)."""
    A: float
    B: float
    kappa: float

    def sequence(self, num_iters):
        shifted = np.arange(num_iters, dtype=np.float64) + 8.0 * self.kappa**2
        return np.sqrt((self.A + self.B * np.log(shifted)) / shifted)

    def as_dict(self):
        return {'kind': 'log-over-k', 'A': self.A, 'B': self.B, 'kappa': self.kappa}


@dataclass(frozen=True)
class GeometricError:
    """B_k^2 = A rho^k."""
    A: float
    rho: float

    def sequence(self, num_iters):
        return np.sqrt(self.A * self.rho ** np.arange(num_iters, dtype=np.float64))

    def as_dict(self):
        return {'kind': 'geometric', 'A': self.A, 'rho': self.rho}


@dataclass(frozen=True)
class BoundInstance:
    """Constants, step schedule and error model of one recursion."""
    mu: float
    L: float
    sigma: float
    D0: float
    schedule: object
    error: object = ZeroError()
    M: float = None
    p: int = None

    def __post_init__(self):
        if not (self.mu > 0 and self.L >= self.mu):
            raise ConfigurationError(f'need 0 < mu <= L, got mu={self.mu}, L={self.L}', field='mu')
        if self.sigma < 0 or self.D0 < 0:
            raise ConfigurationError('sigma and D0 must be non-negative', field='sigma')

    @property
    def kappa(self):
        return self.L / self.mu

    @property
    def step_limit(self):
        return self.mu / (4.0 * self.L * self.L)

    def check_admissible(self):
        eta0 = self.schedule.initial_step
        if eta0 > self.step_limit * (1.0 + CHECK_RTOL):
            raise ConfigurationError(
                f'eta_0 = {eta0!r} exceeds mu/(4L^2) = {self.step_limit!r}', field='schedule'
            )

    def as_dict(self):
        return {
            'mu': self.mu,
            'L': self.L,
            'kappa': self.kappa,
            'sigma': self.sigma,
            'D0': self.D0,
            'schedule': self.schedule.as_dict(),
            'error': self.error.as_dict(),
            'M': self.M,
            'p': self.p,
        }


def _is_theorem_decay(instance):
    schedule = instance.schedule
    if not isinstance(schedule, InverseKStep):
        return False
    kappa = instance.kappa
    return (math.isclose(schedule.c, 2.0 / instance.mu, rel_tol=1e-9)
            and math.isclose(schedule.u, 8.0 * kappa * kappa, rel_tol=1e-9))


def limit_radius(mu, eta, B, sigma):
    """Fixed point of the recursion with constant eta and B (square root of D^2)."""
    return (math.sqrt(B * B + 2.0 * mu * eta * (B * B + 2.0 * sigma * sigma)) + B) / mu


def check_preconditions(kind, instance):
    """Raise ConfigurationError if the instance does not match the lemma's setting."""
    kind = LemmaKind(kind)
    if kind == LemmaKind.C1_LIMSUP:
        if not isinstance(instance.schedule, ConstantStep) or not isinstance(
                instance.error, (ConstantError, ZeroError)):
            raise ConfigurationError('limsup bound needs a constant step and a constant error')
    elif kind == LemmaKind.C2_ITERATES:
        if not _is_theorem_decay(instance) or not isinstance(instance.error, ZeroError):
            raise ConfigurationError('iterate bound needs eta_k = 2/(mu(k + 8 kappa^2)) and no error')
    elif kind == LemmaKind.C3_DERIVATIVES:
        if not _is_theorem_decay(instance) or not isinstance(instance.error, LogOverKError):
            raise ConfigurationError('derivative bound needs the decaying step and a log(k)/k error')
        if not math.isclose(instance.error.kappa, instance.kappa, rel_tol=1e-9):
            raise ConfigurationError('error model kappa differs from L/mu')
    elif kind == LemmaKind.C4_LINEAR:
        if not isinstance(instance.schedule, ConstantStep) or not isinstance(instance.error, GeometricError):
            raise ConfigurationError('linear bound needs a constant step and a geometric error')
        if instance.sigma != 0:
            raise ConfigurationError('linear bound needs sigma = 0', field='sigma')
        rho = 1.0 - instance.mu * instance.schedule.eta / 2.0
        if not math.isclose(instance.error.rho, rho, rel_tol=1e-12):
            raise ConfigurationError(f'error ratio must be 1 - mu eta / 2 = {rho!r}', field='rho')
    elif kind == LemmaKind.T1_GENERAL:
        if not isinstance(instance.schedule, ConstantStep):
            raise ConfigurationError('noise-ball bound needs a constant step')
        if instance.M is None or instance.p is None:
            raise ConfigurationError('noise-ball bound needs M and p', field='M')


def closed_form(kind, instance, k):
    """
    Right-hand side of the lemma's bound on D_k^2, vectorized over k.
    """
    kind = LemmaKind(kind)
    k = np.asarray(k, dtype=np.float64)
    mu, L, kappa = instance.mu, instance.L, instance.kappa
    sigma2 = instance.sigma ** 2
    D02 = instance.D0 ** 2

    if kind == LemmaKind.C1_LIMSUP:
        count = int(np.max(k)) + 1 if k.size else 0
        etas = instance.schedule.sequence(count)
        Bs = instance.error.sequence(count)
        index = k.astype(np.int64)
        eta, B = etas[index], Bs[index]
        delta = (np.sqrt(B * B + 2.0 * mu * eta * (B * B + 2.0 * sigma2)) + B) / mu
        return delta * delta

    if kind == LemmaKind.C2_ITERATES:
        shift = 8.0 * kappa * kappa
        return (shift * D02 + 2.0 * sigma2 / L**2
                + 16.0 * sigma2 / mu**2 * np.log1p(k / shift)) / (k + shift)

    if kind == LemmaKind.C3_DERIVATIVES:
        shift = 8.0 * kappa * kappa
        A, B = instance.error.A, instance.error.B
        return (shift * D02 / (k + shift)
                + (5.0 * (B + A) + 8.0 * sigma2) * np.log(k + shift) ** 2 / (mu**2 * (k + shift)))

    if kind == LemmaKind.C4_LINEAR:
        eta = instance.schedule.eta
        rho = instance.error.rho
        A = instance.error.A
        return rho**k * (D02 + k * A / rho * (2.0 * eta**2 + 2.0 * eta / mu))

    eta = instance.schedule.eta
    radius = 1.0 + 2.0 * math.sqrt(instance.p) * (kappa + 1.0) ** 2
    value = 4.0 * sigma2 * eta / mu * (1.0 + 3.0 * instance.M * radius / mu) ** 2
    return np.full(k.shape, value)
