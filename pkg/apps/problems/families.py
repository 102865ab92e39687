"""
Parametric finite-sum model families with hand-derived per-sample derivatives.

Each per-sample loss has the form

    f(x, theta; xi) = ell(z_xi) + reg * ||x||^2

where z_xi is affine in x and built from row a_xi of the data matrix A
(a residual or a margin). The per-sample Hessian is therefore
``curvature * a a^T + 2 reg I`` and the cross derivative is rank one, which
lets the Jacobian recursion run in O(d p) per step without forming Hessians.

Sample indices are 1-based (xi in {1, ..., m}); rows are 0-based.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from django.db import models
from scipy.special import expit

from apps.core.exceptions import (
    ConfigurationError,
    DomainError,
    SampleIndexError,
    ShapeError,
)

# sup |h'(u)| for h = sigmoid * (1 - sigmoid)
LOGISTIC_CURVATURE_SLOPE = 1.0 / (6.0 * math.sqrt(3.0))
# sup |d/du (-sigmoid(-u) + u h(u))| = sup |2 h(u) + u h'(u)|
LOGISTIC_CROSS_SLOPE = 0.75


class ModelKind(models.TextChoices):
    OLS_STANDARD = 'ols-standard', 'OLS, b(theta) = theta'
    OLS_SIMPLE_INTERP = 'ols-simple-interp', 'OLS, simple interpolation'
    OLS_DOUBLE_INTERP = 'ols-double-interp', 'OLS, double interpolation'
    RIDGE = 'ridge', 'Ridge regression'
    LOGISTIC = 'logistic', 'Logistic regression'
    HUBER = 'huber', 'Huber regression'
    HINGE = 'hinge', 'SVM regression (hinge loss)'


OLS_KINDS = frozenset({
    ModelKind.OLS_STANDARD,
    ModelKind.OLS_SIMPLE_INTERP,
    ModelKind.OLS_DOUBLE_INTERP,
})


@dataclass(frozen=True)
class SampleDerivatives:
    """Value, gradient and second derivatives of one sample (or of the mean)."""
    value: float
    grad_x: np.ndarray
    hess_xx: np.ndarray
    hess_xtheta: np.ndarray


class LossTerms(NamedTuple):
    """
    Scalar pieces of ell at z: the gradient is ``slope * a``, the Hessian
    ``curvature * a a^T`` and the cross derivative ``cross`` times the
    family's rank-one direction.
    """
    value: object
    slope: object
    curvature: object
    cross: object


def orthonormal_data(m, d, seed):
    """
    Orthonormalized standard Gaussian m x d matrix, reproducible from seed.
    """
    if d > m:
        raise ConfigurationError(f'orthonormal columns need d <= m, got d={d}, m={m}', field='d')
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((m, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


class FiniteSumProblem:
    """
    Base class of the model zoo: F(x, theta) = (1/m) sum_xi f(x, theta; xi).
    """
    kind = None
    regularized = True
    twice_differentiable = True
    gradient_lipschitz = True

    def __init__(self, data, reg=0.0, huber_delta=0.1, seed=None):
        data = np.array(data, dtype=np.float64)
        if data.ndim != 2 or min(data.shape) < 1:
            raise ShapeError(f'data matrix must be a non-empty 2-d array, got shape {data.shape}')
        if not np.all(np.isfinite(data)):
            raise DomainError('data matrix contains non-finite entries')
        data.setflags(write=False)

        self.data = data
        self.m, self.d = data.shape
        self.reg = float(reg)
        self.huber_delta = float(huber_delta)
        self.seed = seed
        self._rows = np.arange(self.m)
        self._sq_norms = np.einsum('ij,ij->i', data, data)
        self._validate_reg()

    def _validate_reg(self):
        if self.regularized and not self.reg > 0:
            raise ConfigurationError(f'{self.kind} needs reg > 0, got {self.reg}', field='reg')
        if not self.regularized and self.reg != 0:
            raise ConfigurationError(f'{self.kind} takes no regularizer, got reg={self.reg}', field='reg')

    def __repr__(self):
        return f'{self.__class__.__name__}(m={self.m}, d={self.d}, reg={self.reg})'

    @property
    def p(self):
        """Dimension of the parameter theta."""
        return self.m

    @property
    def sample_space(self):
        return range(1, self.m + 1)

    @property
    def model_id(self):
        return f'{self.kind}-m{self.m}-d{self.d}-seed{self.seed}'

    # Validation

    def row_of(self, xi):
        """Map a 1-based sample index to a row of the data matrix."""
        if isinstance(xi, (bool, np.bool_)) or not isinstance(xi, (int, np.integer)):
            raise SampleIndexError(xi, self.m)
        if not 1 <= xi <= self.m:
            raise SampleIndexError(xi, self.m)
        return int(xi) - 1

    def check_point(self, x, theta):
        x = np.asarray(x, dtype=np.float64)
        theta = np.asarray(theta, dtype=np.float64)
        if x.shape != (self.d,):
            raise ShapeError(f'x must have shape ({self.d},), got {x.shape}')
        if theta.shape != (self.p,):
            raise ShapeError(f'theta must have shape ({self.p},), got {theta.shape}')
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(theta))):
            raise DomainError('x and theta must be finite')
        return x, theta

    def check_jacobian(self, D):
        D = np.asarray(D, dtype=np.float64)
        if D.shape != (self.d, self.p):
            raise ShapeError(f'Jacobian must have shape ({self.d}, {self.p}), got {D.shape}')
        return D

    # Family hooks

    def _affine(self, rows, x, theta):
        """Residual or margin z for the given rows."""
        raise NotImplementedError

    def _loss(self, z, rows, theta):
        """LossTerms of ell at z."""
        raise NotImplementedError

    def _add_cross(self, G, row, a, cross):
        G[:, row] += cross * a

    def _dense_cross(self, row, a, cross):
        out = np.zeros((self.d, self.p))
        out[:, row] = cross * a
        return out

    def _full_cross(self, crosses):
        return self.data.T * crosses / self.m

    # Per-sample oracles

    def sample(self, x, theta, xi):
        """Dense per-sample derivatives at (x, theta; xi)."""
        row = self.row_of(xi)
        x, theta = self.check_point(x, theta)
        a = self.data[row]
        terms = self._loss(self._affine(row, x, theta), row, theta)

        return SampleDerivatives(
            value=float(terms.value) + self.reg * float(x @ x),
            grad_x=terms.slope * a + 2.0 * self.reg * x,
            hess_xx=terms.curvature * np.outer(a, a) + 2.0 * self.reg * np.eye(self.d),
            hess_xtheta=self._dense_cross(row, a, terms.cross),
        )

    def gradient(self, x, theta, xi):
        row = self.row_of(xi)
        return self._gradient_row(row, x, theta)

    def jacobian_direction(self, x, theta, xi, D):
        """
        Return (grad_x f, hess_xx f @ D + hess_xtheta f) at (x, theta; xi)
        without materializing the Hessian.
        """
        return self._direction_row(self.row_of(xi), x, theta, D)

    def _gradient_row(self, row, x, theta):
        a = self.data[row]
        terms = self._loss(self._affine(row, x, theta), row, theta)
        grad = terms.slope * a
        if self.reg:
            grad = grad + 2.0 * self.reg * x
        return grad

    def _direction_row(self, row, x, theta, D):
        a = self.data[row]
        terms = self._loss(self._affine(row, x, theta), row, theta)
        grad = terms.slope * a
        if terms.curvature:
            G = terms.curvature * np.outer(a, a @ D)
        else:
            G = np.zeros_like(D)
        if self.reg:
            grad = grad + 2.0 * self.reg * x
            G += 2.0 * self.reg * D
        self._add_cross(G, row, a, terms.cross)
        return grad, G

    # Finite-sum oracles

    def full_terms(self, x, theta):
        return self._loss(self._affine(self._rows, x, theta), self._rows, theta)

    def objective(self, x, theta):
        terms = self.full_terms(x, theta)
        return float(np.mean(terms.value)) + self.reg * float(x @ x)

    def full(self, x, theta):
        """Mean of the per-sample derivatives over all m samples."""
        x, theta = self.check_point(x, theta)
        terms = self.full_terms(x, theta)
        curvature = np.broadcast_to(terms.curvature, (self.m,))
        crosses = np.broadcast_to(terms.cross, (self.m,))

        return SampleDerivatives(
            value=float(np.mean(terms.value)) + self.reg * float(x @ x),
            grad_x=self.data.T @ np.broadcast_to(terms.slope, (self.m,)) / self.m + 2.0 * self.reg * x,
            hess_xx=(self.data.T * curvature) @ self.data / self.m + 2.0 * self.reg * np.eye(self.d),
            hess_xtheta=self._full_cross(crosses),
        )

    def full_gradient(self, x, theta):
        terms = self.full_terms(x, theta)
        return self.data.T @ np.broadcast_to(terms.slope, (self.m,)) / self.m + 2.0 * self.reg * x

    # Constants

    def strong_convexity_constant(self):
        """Per-sample strong convexity constant of the regularized families."""
        return 2.0 * self.reg

    def smoothness_constant(self, theta):
        """max over samples of the largest per-sample Hessian eigenvalue."""
        return float(np.max(self._sq_norms)) + 2.0 * self.reg

    def hessian_lipschitz_constant(self, theta):
        """Lipschitz constant in x of the per-sample second derivatives, or None."""
        return 0.0


class LeastSquaresProblem(FiniteSumProblem):
    """Ordinary least squares with b(theta) = theta: f = (a^T x - theta_xi)^2 / 2."""
    kind = ModelKind.OLS_STANDARD
    regularized = False

    def _affine(self, rows, x, theta):
        return self.data[rows] @ x - theta[rows]

    def _loss(self, z, rows, theta):
        return LossTerms(0.5 * z * z, z, 1.0, -1.0)

    def strong_convexity_constant(self):
        """Per-sample Hessians a a^T are rank one: only d == 1 is strongly convex."""
        if self.d == 1 and np.all(self._sq_norms > 0):
            return float(np.min(self._sq_norms))
        return None


class SimpleInterpolationProblem(LeastSquaresProblem):
    """
    OLS with b(theta) = theta where theta = A zeta is supplied by the caller;
    derivatives are taken with respect to theta, not zeta.
    """
    kind = ModelKind.OLS_SIMPLE_INTERP


class DoubleInterpolationProblem(LeastSquaresProblem):
    """OLS with b(theta) = A theta, theta in R^d: f = (a^T (x - theta))^2 / 2."""
    kind = ModelKind.OLS_DOUBLE_INTERP

    @property
    def p(self):
        return self.d

    def _affine(self, rows, x, theta):
        return self.data[rows] @ (x - theta)

    def _add_cross(self, G, row, a, cross):
        G += cross * np.outer(a, a)

    def _dense_cross(self, row, a, cross):
        return cross * np.outer(a, a)

    def _full_cross(self, crosses):
        return (self.data.T * crosses) @ self.data / self.m


class RidgeProblem(LeastSquaresProblem):
    """Ridge regression: f = (a^T x - theta_xi)^2 / 2 + reg ||x||^2."""
    kind = ModelKind.RIDGE
    regularized = True

    def strong_convexity_constant(self):
        return 2.0 * self.reg


class LogisticProblem(FiniteSumProblem):
    """Logistic regression: f = log(1 + exp(-theta_xi a^T x)) + reg ||x||^2."""
    kind = ModelKind.LOGISTIC

    def _affine(self, rows, x, theta):
        return theta[rows] * (self.data[rows] @ x)

    def _loss(self, u, rows, theta):
        label = theta[rows]
        s_neg = expit(-u)
        h = expit(u) * s_neg
        return LossTerms(
            np.logaddexp(0.0, -u),
            -label * s_neg,
            label * label * h,
            -s_neg + u * h,
        )

    def smoothness_constant(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        return float(np.max(theta * theta * self._sq_norms)) / 4.0 + 2.0 * self.reg

    def hessian_lipschitz_constant(self, theta):
        """
        Bounds ||H(x) - H(y)||_op and ||C(x) - C(y)||_F by M ||x - y|| for every
        sample, with H = theta^2 h(u) a a^T and C = g(u) a e_xi^T.
        """
        theta = np.abs(np.asarray(theta, dtype=np.float64))
        norms = np.sqrt(self._sq_norms)
        curvature_part = LOGISTIC_CURVATURE_SLOPE * theta**3 * norms**3
        cross_part = LOGISTIC_CROSS_SLOPE * theta * norms**2
        return float(np.max(np.maximum(curvature_part, cross_part)))


class HuberProblem(FiniteSumProblem):
    """
    Huber regression with threshold delta on r = theta_xi - a^T x.
    |r| == delta belongs to the quadratic branch.
    """
    kind = ModelKind.HUBER
    twice_differentiable = False

    def _validate_reg(self):
        super()._validate_reg()
        if not self.huber_delta > 0:
            raise ConfigurationError(f'huber_delta must be positive, got {self.huber_delta}',
                                     field='huber_delta')

    def _affine(self, rows, x, theta):
        return theta[rows] - self.data[rows] @ x

    def _loss(self, r, rows, theta):
        delta = self.huber_delta
        inside = np.abs(r) <= delta
        return LossTerms(
            np.where(inside, 0.5 * r * r, delta * (np.abs(r) - 0.5 * delta)),
            np.where(inside, -r, -delta * np.sign(r)),
            np.where(inside, 1.0, 0.0),
            np.where(inside, -1.0, 0.0),
        )

    def hessian_lipschitz_constant(self, theta):
        return None


class HingeProblem(FiniteSumProblem):
    """
    Hinge loss f = max(0, 1 - theta_xi a^T x) + reg ||x||^2.
    At margin exactly 1 the zero subgradient is used.
    """
    kind = ModelKind.HINGE
    twice_differentiable = False
    gradient_lipschitz = False

    def _affine(self, rows, x, theta):
        return theta[rows] * (self.data[rows] @ x)

    def _loss(self, u, rows, theta):
        active = u < 1.0
        return LossTerms(
            np.where(active, 1.0 - u, 0.0),
            np.where(active, -theta[rows], 0.0),
            0.0,
            np.where(active, -1.0, 0.0),
        )

    def hessian_lipschitz_constant(self, theta):
        return None


FAMILIES = {
    ModelKind.OLS_STANDARD: LeastSquaresProblem,
    ModelKind.OLS_SIMPLE_INTERP: SimpleInterpolationProblem,
    ModelKind.OLS_DOUBLE_INTERP: DoubleInterpolationProblem,
    ModelKind.RIDGE: RidgeProblem,
    ModelKind.LOGISTIC: LogisticProblem,
    ModelKind.HUBER: HuberProblem,
    ModelKind.HINGE: HingeProblem,
}
