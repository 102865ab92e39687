"""
Oracle services: exact minimizer, implicit-function Jacobian and constants.
"""
import logging

import numpy as np
from django.conf import settings
from scipy import linalg

from apps.core.exceptions import OracleFailure, RankError
from apps.problems.families import ModelKind, OLS_KINDS
from .solutions import SolutionOracle

logger = logging.getLogger(__name__)

QUADRATIC_KINDS = OLS_KINDS | {ModelKind.RIDGE}
ARMIJO = 1e-4
# Dual weights are read off samples whose margin is this close to one.
MARGIN_TOL = 1e-9


def _cholesky(hess):
    try:
        return linalg.cho_factor(hess, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise RankError() from exc


class OracleService:
    """Solution oracle business logic service."""

    @staticmethod
    def solve(problem, theta, tol=None):
        """
        Compute x*(theta), D*(theta) = -hess_xx F^{-1} hess_xtheta F and the
        constants (mu, L, kappa, sigma^2, M).
        """
        if tol is None:
            tol = settings.PIGGYBACK['NEWTON_TOL']
        theta = np.asarray(theta, dtype=np.float64)
        problem.check_point(np.zeros(problem.d), theta)

        if problem.kind in QUADRATIC_KINDS:
            x_star, grad_norm, iterations, solver = OracleService._solve_quadratic(problem, theta)
        elif problem.kind == ModelKind.HINGE:
            x_star, grad_norm, iterations, solver = OracleService._solve_hinge(problem, theta, tol)
        else:
            x_star, grad_norm, iterations, solver = OracleService._solve_newton(problem, theta, tol)

        full = problem.full(x_star, theta)
        D_star = linalg.cho_solve(_cholesky(full.hess_xx), -full.hess_xtheta)
        ift_residual = float(np.linalg.norm(full.hess_xx @ D_star + full.hess_xtheta))

        constants = OracleService.estimate_constants(problem, theta, x_star, D_star)
        oracle = SolutionOracle(
            x_star=x_star,
            D_star=D_star,
            grad_norm=grad_norm,
            ift_residual=ift_residual,
            solver=solver,
            iterations=iterations,
            **constants,
        )
        logger.info(
            f'Solved {problem.model_id} with {solver} in {iterations} iterations: '
            f'mu={oracle.mu:.6g} L={oracle.L:.6g} sigma2={oracle.sigma2:.6g}'
        )
        return oracle

    @staticmethod
    def _solve_quadratic(problem, theta):
        """Normal equations, then one refinement step."""
        full = problem.full(np.zeros(problem.d), theta)
        factor = _cholesky(full.hess_xx)
        x = linalg.cho_solve(factor, -full.grad_x)
        x = x - linalg.cho_solve(factor, problem.full_gradient(x, theta))
        return x, float(np.linalg.norm(problem.full_gradient(x, theta))), 1, 'cholesky'

    @staticmethod
    def _solve_newton(problem, theta, tol):
        """
        Damped Newton from x = 0. A step is accepted on sufficient decrease of F
        or on decrease of the gradient norm, so the last digits can still be won
        once F stops resolving the progress.
        """
        max_iter = settings.PIGGYBACK['NEWTON_MAX_ITER']
        x = np.zeros(problem.d)
        for iteration in range(max_iter):
            full = problem.full(x, theta)
            grad_norm = float(np.linalg.norm(full.grad_x))
            if grad_norm <= tol:
                return x, grad_norm, iteration, 'newton'

            direction = linalg.cho_solve(_cholesky(full.hess_xx), -full.grad_x)
            slope = float(full.grad_x @ direction)
            t = 1.0
            while t > 1e-12:
                candidate = x + t * direction
                if problem.objective(candidate, theta) <= full.value + ARMIJO * t * slope:
                    break
                if np.linalg.norm(problem.full_gradient(candidate, theta)) < grad_norm:
                    break
                t *= 0.5
            else:
                logger.warning(f'Newton line search stalled at gradient norm {grad_norm:.3e}')
                break
            x = candidate

        logger.warning(f'Newton did not reach tol={tol:g} on {problem.model_id}; using gradient descent')
        return OracleService._solve_gradient_descent(problem, theta, tol, x)

    @staticmethod
    def _solve_gradient_descent(problem, theta, tol, x):
        max_iter = settings.PIGGYBACK['FALLBACK_MAX_ITER']
        step = 1.0 / problem.smoothness_constant(theta)
        grad = problem.full_gradient(x, theta)
        for iteration in range(max_iter):
            grad_norm = float(np.linalg.norm(grad))
            if grad_norm <= tol:
                return x, grad_norm, iteration, 'gradient-descent'
            value = problem.objective(x, theta)
            t = step
            while problem.objective(x - t * grad, theta) > value - 0.5 * t * grad_norm**2 and t > 1e-20:
                t *= 0.5
            x = x - t * grad
            grad = problem.full_gradient(x, theta)
        raise OracleFailure(
            f'gradient norm {np.linalg.norm(grad):.3e} above tol {tol:g} after {max_iter} iterations'
        )

    @staticmethod
    def _solve_hinge(problem, theta, tol):
        """
        Dual coordinate descent on
            max sum(alpha) - ||sum alpha_i z_i||^2 / 2,  0 <= alpha_i <= 1 / (2 reg m),
        with z_i = theta_i a_i; the primal minimizer is x = sum alpha_i z_i.
        Stationarity is measured by the subgradient that weights margin-one
        samples by alpha_i / C.
        """
        max_epochs = settings.PIGGYBACK['FALLBACK_MAX_ITER']
        m = problem.m
        upper = 1.0 / (2.0 * problem.reg * m)
        Z = theta[:, None] * problem.data
        q = np.einsum('ij,ij->i', Z, Z)
        active = np.flatnonzero(q > 0)
        alpha = np.zeros(m)
        w = np.zeros(problem.d)

        residual = np.inf
        for epoch in range(max_epochs):
            violation = 0.0
            for i in active:
                gradient = float(w @ Z[i]) - 1.0
                if alpha[i] <= 0.0:
                    projected = min(gradient, 0.0)
                elif alpha[i] >= upper:
                    projected = max(gradient, 0.0)
                else:
                    projected = gradient
                violation = max(violation, abs(projected))
                if projected != 0.0:
                    new = min(max(alpha[i] - gradient / q[i], 0.0), upper)
                    w += (new - alpha[i]) * Z[i]
                    alpha[i] = new
            w = Z.T @ alpha
            if violation <= tol:
                residual = OracleService.hinge_stationarity(problem, theta, w, alpha / upper)
                if residual <= tol:
                    return w, residual, epoch + 1, 'dual-coordinate-descent'

        raise OracleFailure(f'hinge dual solver stopped at stationarity {residual:.3e} after {max_epochs} epochs')

    @staticmethod
    def hinge_stationarity(problem, theta, x, weights):
        """
        Norm of 2 reg x - (1/m) sum beta_i theta_i a_i with beta_i = 1 on
        margins below one, weights[i] on margins within MARGIN_TOL of one
        and 0 above.
        """
        margins = theta * (problem.data @ x)
        beta = np.where(margins < 1.0 - MARGIN_TOL, 1.0, 0.0)
        on_margin = np.abs(margins - 1.0) <= MARGIN_TOL
        beta[on_margin] = np.clip(weights[on_margin], 0.0, 1.0)
        subgradient = 2.0 * problem.reg * x - problem.data.T @ (beta * theta) / problem.m
        return float(np.linalg.norm(subgradient))

    @staticmethod
    def estimate_constants(problem, theta, x_star, D_star):
        """
        mu, L, kappa, the two variance components at (x*, D*) and M.
        """
        theta = np.asarray(theta, dtype=np.float64)
        if problem.kind in OLS_KINDS:
            gram = problem.data.T @ problem.data / problem.m
            mu = float(linalg.eigvalsh(gram, subset_by_index=[0, 0])[0])
        else:
            mu = problem.strong_convexity_constant()
        L = problem.smoothness_constant(theta)

        grad_sq = 0.0
        jac_sq = 0.0
        for xi in problem.sample_space:
            grad, direction = problem.jacobian_direction(x_star, theta, xi, D_star)
            grad_sq += float(grad @ grad)
            jac_sq += float(np.sum(direction * direction))

        M = problem.hessian_lipschitz_constant(theta)
        if M is not None and M > 0:
            OracleService.check_hessian_lipschitz(problem, theta, M)

        return {
            'mu': mu,
            'L': L,
            'kappa': L / mu,
            'sigma2_grad': grad_sq / problem.m,
            'sigma2_jac': jac_sq / problem.m,
            'M': M,
        }

    @staticmethod
    def check_hessian_lipschitz(problem, theta, M, trials=20, seed=0):
        """
        Check M against per-sample second-derivative differences at random
        point pairs; raise OracleFailure if any pair exceeds it.
        """
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            x = rng.standard_normal(problem.d)
            y = x + 0.1 * rng.standard_normal(problem.d)
            gap = float(np.linalg.norm(x - y))
            for xi in problem.sample_space:
                at_x = problem.sample(x, theta, xi)
                at_y = problem.sample(y, theta, xi)
                hess_gap = np.linalg.norm(at_x.hess_xx - at_y.hess_xx, 2)
                cross_gap = np.linalg.norm(at_x.hess_xtheta - at_y.hess_xtheta)
                worst = max(worst, hess_gap / gap, cross_gap / gap)
        if worst > M * (1.0 + 1e-9):
            raise OracleFailure(f'Hessian Lipschitz bound {M:.6g} violated: observed {worst:.6g}')
        logger.debug(f'Hessian Lipschitz bound {M:.6g} checked, observed {worst:.6g}')
        return worst
