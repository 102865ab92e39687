"""
Engine services: the joint recursion on (x_k, D_k).

    x_{k+1} = x_k - eta_k grad_x f(x_k, theta; xi_{k+1})
    D_{k+1} = D_k - eta_k (hess_xx f(x_k, theta; xi_{k+1}) D_k + hess_xtheta f(x_k, theta; xi_{k+1}))

Both updates use the same sample and the pre-update iterate.
"""
import logging
import math

import numpy as np

from apps.core.exceptions import ConfigurationError, NumericalOverflowError
from apps.sampling.streams import SampleStream
from .states import JointState, Trajectory

logger = logging.getLogger(__name__)


def _snapshot_ks(num_iters, stride):
    ks = list(range(0, num_iters + 1, stride))
    if ks[-1] != num_iters:
        ks.append(num_iters)
    return np.asarray(ks, dtype=np.int64)


class EngineService:
    """Joint SGD business logic service."""

    @staticmethod
    def derivative_bound(p, kappa, D0_norm=0.0):
        """Almost-sure bound max(||D_0||_F, 2 sqrt(p) (kappa + 1)^2) on every ||D_k||_F."""
        return max(float(D0_norm), 2.0 * math.sqrt(p) * (kappa + 1.0) ** 2)

    @staticmethod
    def joint_step(state, theta, eta, xi, problem, check=True):
        """One step of the joint recursion with step eta and sample xi."""
        if not (math.isfinite(eta) and eta >= 0):
            raise ConfigurationError(f'step size must be a non-negative finite number, got {eta!r}',
                                     field='eta')
        grad, direction = problem.jacobian_direction(state.x, theta, xi, state.D)
        x = state.x - eta * grad
        D = state.D - eta * direction
        k = state.k + 1
        if check and not (np.all(np.isfinite(x)) and np.all(np.isfinite(D))):
            raise NumericalOverflowError(k)
        return JointState(k, x, D)

    @staticmethod
    def run(problem, theta, schedule, stream, num_iters, stride=1, x0=None, D0=None,
            derivative_bound=None):
        """
        Apply num_iters joint steps drawing indices from stream. Snapshots are
        kept at k = 0, every stride steps and at k = num_iters; finiteness and
        the optional derivative bound are checked at snapshots only.
        """
        if num_iters < 1:
            raise ConfigurationError(f'num_iters must be at least 1, got {num_iters}', field='num_iters')
        if stride < 1:
            raise ConfigurationError(f'stride must be at least 1, got {stride}', field='stride')

        state = JointState.initial(problem, x0, D0)
        x, D = state.x, state.D
        theta = np.asarray(theta, dtype=np.float64)
        problem.check_point(x, theta)

        etas = schedule.sequence(num_iters)
        samples = stream.take(num_iters)
        ks = _snapshot_ks(num_iters, stride)
        xs = np.empty((len(ks), problem.d))
        Ds = np.empty((len(ks), problem.d, problem.p))
        xs[0], Ds[0] = x, D
        violations = []

        slot = 1
        for k in range(num_iters):
            grad, direction = problem.jacobian_direction(x, theta, samples[k], D)
            x = x - etas[k] * grad
            D = D - etas[k] * direction
            if k + 1 != ks[slot]:
                continue

            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(D))):
                logger.error(f'Run {problem.model_id} overflowed at iteration {k + 1}')
                raise NumericalOverflowError(k + 1)
            if derivative_bound is not None:
                norm = float(np.linalg.norm(D))
                if norm > derivative_bound:
                    logger.warning(
                        f'||D_k||_F = {norm:.6g} exceeds bound {derivative_bound:.6g} at k={k + 1}'
                    )
                    violations.append(k + 1)
            xs[slot], Ds[slot] = x, D
            slot += 1

        return Trajectory(
            ks=ks,
            xs=xs,
            Ds=Ds,
            samples=samples,
            schedule_id=schedule.schedule_id,
            seed=stream.seed,
            model_id=problem.model_id,
            bound_violations=violations,
        )

    @staticmethod
    def run_derivative_sgd(problem, theta, x_star, schedule, stream, num_iters, stride=1, D0=None):
        """
        Plain SGD on the derivative problem: D <- D - eta (hess_xx f(x*) D + hess_xtheta f(x*)),
        with the second derivatives frozen at x*. Returns a Trajectory whose x is x* throughout.
        """
        if num_iters < 1:
            raise ConfigurationError(f'num_iters must be at least 1, got {num_iters}', field='num_iters')
        state = JointState.initial(problem, x_star, D0)
        x_star, D = state.x, state.D
        theta = np.asarray(theta, dtype=np.float64)

        etas = schedule.sequence(num_iters)
        samples = stream.take(num_iters)
        ks = _snapshot_ks(num_iters, stride)
        Ds = np.empty((len(ks), problem.d, problem.p))
        Ds[0] = D

        slot = 1
        for k in range(num_iters):
            _, direction = problem.jacobian_direction(x_star, theta, samples[k], D)
            D = D - etas[k] * direction
            if k + 1 == ks[slot]:
                if not np.all(np.isfinite(D)):
                    raise NumericalOverflowError(k + 1, 'Jacobian')
                Ds[slot] = D
                slot += 1

        return Trajectory(
            ks=ks,
            xs=np.broadcast_to(x_star, (len(ks), problem.d)).copy(),
            Ds=Ds,
            samples=samples,
            schedule_id=schedule.schedule_id,
            seed=stream.seed,
            model_id=problem.model_id,
        )

    @staticmethod
    def final_iterate(problem, theta, schedule, stream, num_iters, x0=None):
        """x_K of plain SGD (no Jacobian), for finite-difference replays."""
        x = np.zeros(problem.d) if x0 is None else np.array(x0, dtype=np.float64)
        etas = schedule.sequence(num_iters)
        for eta, xi in zip(etas, stream.take(num_iters)):
            x = x - eta * problem.gradient(x, theta, xi)
        if not np.all(np.isfinite(x)):
            raise NumericalOverflowError(num_iters, 'iterate')
        return x

    @staticmethod
    def jacobian_by_path_fd(problem, theta, schedule, seed, num_iters, h, x0=None):
        """
        Column-wise central differences [x_K(theta + h e_j) - x_K(theta - h e_j)] / (2h),
        every perturbed run replaying the identical index stream.
        """
        if not h > 0:
            raise ConfigurationError(f'finite-difference step must be positive, got {h!r}', field='h')
        theta = np.asarray(theta, dtype=np.float64)
        base = SampleStream(seed, problem.m)
        columns = np.empty((problem.d, problem.p))
        for j in range(problem.p):
            step = np.zeros(problem.p)
            step[j] = h
            plus = EngineService.final_iterate(problem, theta + step, schedule, base.fork(), num_iters, x0)
            minus = EngineService.final_iterate(problem, theta - step, schedule, base.fork(), num_iters, x0)
            columns[:, j] = (plus - minus) / (2.0 * h)
        return columns

    @staticmethod
    def column_relative_errors(reference, estimate):
        """
        Per-column ||estimate_j - reference_j|| / ||reference_j|| (0 where both
        columns vanish, inf where only the reference does).
        """
        reference = np.asarray(reference, dtype=np.float64)
        diff = np.linalg.norm(np.asarray(estimate) - reference, axis=0)
        scale = np.linalg.norm(reference, axis=0)
        with np.errstate(divide='ignore', invalid='ignore'):
            errors = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0),
                              np.where(diff > 0, np.inf, 0.0))
        return errors
