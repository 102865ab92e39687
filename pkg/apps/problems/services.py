"""
Problem services: construction of model families and their oracles.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from apps.core.utils import derive_seed
from .families import FAMILIES, ModelKind, OLS_KINDS, orthonormal_data

logger = logging.getLogger(__name__)

# Child-seed keys; the data matrix and theta come from independent streams.
DATA_KEY = 0
THETA_KEY = 1


@dataclass(frozen=True)
class AdmissibilityReport:
    """Which smoothness and convexity assumptions a family satisfies."""
    kind: str
    per_sample_strong_convexity: bool
    strong_convexity_constant: float = None
    gradient_lipschitz: bool = True
    twice_differentiable: bool = True
    hessian_lipschitz: bool = True
    hessian_lipschitz_constant: float = None
    violations: list = field(default_factory=list)

    @property
    def admissible(self):
        return not self.violations

    def as_dict(self):
        return {
            'kind': str(self.kind),
            'per_sample_strong_convexity': self.per_sample_strong_convexity,
            'strong_convexity_constant': self.strong_convexity_constant,
            'gradient_lipschitz': self.gradient_lipschitz,
            'twice_differentiable': self.twice_differentiable,
            'hessian_lipschitz': self.hessian_lipschitz,
            'hessian_lipschitz_constant': self.hessian_lipschitz_constant,
            'violations': list(self.violations),
        }


class ProblemService:
    """Model family business logic service."""

    @staticmethod
    def build_problem(kind, d, m, seed=0, reg=0.0, huber_delta=0.1):
        """
        Build a family with an orthonormal data matrix generated from seed.
        """
        kind = ModelKind(kind)
        data = orthonormal_data(m, d, derive_seed(seed, DATA_KEY))
        problem = FAMILIES[kind](data, reg=reg, huber_delta=huber_delta, seed=seed)
        logger.debug(f'Built {problem!r} for {kind}')
        return problem

    @staticmethod
    def from_description(description):
        """
        Build a family from a JSON-like description
        {kind, d, m, seed, reg, huber_delta}.
        """
        from .serializers import ModelFamilySerializer

        serializer = ModelFamilySerializer(data=description)
        serializer.is_valid(raise_exception=True)
        return ProblemService.build_problem(**serializer.validated_data)

    @staticmethod
    def sample_theta(problem, seed=0):
        """
        Draw the parameter the experiments use for this family:
        N(0, I_p) in general, A zeta with zeta ~ N(0, I_d) for simple interpolation.
        """
        rng = np.random.default_rng(derive_seed(seed, THETA_KEY))
        if problem.kind == ModelKind.OLS_SIMPLE_INTERP:
            return problem.data @ rng.standard_normal(problem.d)
        return rng.standard_normal(problem.p)

    @staticmethod
    def check_assumptions(problem, theta=None):
        """
        Report, analytically per family, which of per-sample strong convexity,
        gradient Lipschitzness and Hessian Lipschitzness hold. The Hessian
        constant of the logistic family depends on theta and is only reported
        when theta is given.
        """
        violations = []
        strong_convexity = problem.strong_convexity_constant()
        if strong_convexity is None:
            violations.append('per-sample Hessians are rank one: no per-sample strong convexity')
        if not problem.gradient_lipschitz:
            violations.append('per-sample gradients are not Lipschitz')
        if not problem.twice_differentiable:
            violations.append('per-sample losses are not twice differentiable')

        hessian_lipschitz = problem.twice_differentiable
        if theta is not None:
            hessian_constant = problem.hessian_lipschitz_constant(theta)
        else:
            hessian_constant = 0.0 if problem.kind in OLS_KINDS or problem.kind == ModelKind.RIDGE else None

        return AdmissibilityReport(
            kind=problem.kind,
            per_sample_strong_convexity=strong_convexity is not None,
            strong_convexity_constant=strong_convexity,
            gradient_lipschitz=problem.gradient_lipschitz,
            twice_differentiable=problem.twice_differentiable,
            hessian_lipschitz=hessian_lipschitz,
            hessian_lipschitz_constant=hessian_constant,
            violations=violations,
        )
