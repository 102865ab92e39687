"""
Exact solution x*(theta), its Jacobian and the problem constants.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SolutionOracle:
    x_star: np.ndarray
    D_star: np.ndarray
    mu: float
    L: float
    kappa: float
    sigma2_grad: float
    sigma2_jac: float
    M: float = None
    grad_norm: float = 0.0
    ift_residual: float = 0.0
    solver: str = ''
    iterations: int = 0

    @property
    def sigma2(self):
        return max(self.sigma2_grad, self.sigma2_jac)

    @property
    def sigma(self):
        return float(np.sqrt(self.sigma2))

    @property
    def base_step(self):
        """mu / (4 L^2), the largest constant step the rate theorem allows."""
        return self.mu / (4.0 * self.L * self.L)

    @property
    def p(self):
        return self.D_star.shape[1]

    def as_dict(self):
        return {
            'x_star': self.x_star,
            'D_star': self.D_star,
            'mu': self.mu,
            'L': self.L,
            'kappa': self.kappa,
            'sigma2': self.sigma2,
            'sigma2_grad': self.sigma2_grad,
            'sigma2_jac': self.sigma2_jac,
            'M': self.M,
            'grad_norm': self.grad_norm,
            'ift_residual': self.ift_residual,
            'solver': self.solver,
            'iterations': self.iterations,
        }
