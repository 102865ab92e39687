"""
Pytest configuration and shared fixtures.
"""
import numpy as np
import pytest


@pytest.fixture
def make_problem():
    """Factory fixture to build model families with small defaults."""
    def _make_problem(kind='ridge', d=3, m=8, seed=0, reg=None, huber_delta=0.1):
        from apps.problems.families import OLS_KINDS, ModelKind
        from apps.problems.services import ProblemService

        if reg is None:
            reg = 0.0 if ModelKind(kind) in OLS_KINDS else 0.05
        return ProblemService.build_problem(kind, d, m, seed=seed, reg=reg, huber_delta=huber_delta)
    return _make_problem


@pytest.fixture
def make_scalar_problem():
    """Factory fixture for d = m = 1 problems with a = 1."""
    def _make_scalar_problem(kind='ols-standard', reg=0.0, a=1.0):
        from apps.problems.families import FAMILIES, ModelKind

        return FAMILIES[ModelKind(kind)](np.array([[a]]), reg=reg)
    return _make_scalar_problem


@pytest.fixture
def ridge_problem(make_problem):
    """Ridge problem, d=3, m=8."""
    return make_problem('ridge')


@pytest.fixture
def logistic_problem(make_problem):
    """Logistic problem, d=3, m=8."""
    return make_problem('logistic')


@pytest.fixture
def ols_problem(make_problem):
    """OLS problem with b(theta) = theta, d=3, m=8."""
    return make_problem('ols-standard')


@pytest.fixture
def make_theta():
    """Factory fixture for the parameter the experiments use."""
    def _make_theta(problem, seed=0):
        from apps.problems.services import ProblemService

        return ProblemService.sample_theta(problem, seed)
    return _make_theta


@pytest.fixture
def solved(make_theta):
    """Factory fixture returning (theta, oracle) for a problem."""
    def _solved(problem, seed=0):
        from apps.oracle.services import OracleService

        theta = make_theta(problem, seed)
        return theta, OracleService.solve(problem, theta)
    return _solved


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
