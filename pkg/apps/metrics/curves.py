"""
Error curves, their Monte Carlo aggregates and rate fits.
"""
from dataclasses import dataclass

import numpy as np
from django.db import models

CSV_COLUMNS = [
    'k',
    'subopt_mean', 'subopt_se',
    'jacerr_mean', 'jacerr_se',
    'jacerr_sq_mean', 'jacerr_sq_se',
]


class FitModel(models.TextChoices):
    NOISE_BALL = 'noise-ball-vs-eta', 'Tail MSE against step size (log-log slope)'
    LOG_RATE = 'log2k-over-k', 'MSE against log^2(k)/k'
    GEOMETRIC = 'geometric', 'log MSE against k'


@dataclass(frozen=True)
class ErrorCurve:
    """Suboptimality, Jacobian error and iterate error of one run at its snapshots."""
    ks: np.ndarray
    subopt: np.ndarray
    jac_err: np.ndarray
    iter_err: np.ndarray


@dataclass(frozen=True)
class AggregateCurve:
    ks: np.ndarray
    subopt_mean: np.ndarray
    subopt_se: np.ndarray
    jacerr_mean: np.ndarray
    jacerr_se: np.ndarray
    jacerr_sq_mean: np.ndarray
    jacerr_sq_se: np.ndarray
    itererr_sq_mean: np.ndarray
    itererr_sq_se: np.ndarray
    replications: int

    def rows(self):
        """One dict per snapshot, keyed by CSV_COLUMNS."""
        series = {name: getattr(self, name) for name in CSV_COLUMNS[1:]}
        return [
            {'k': int(k), **{name: float(values[i]) for name, values in series.items()}}
            for i, k in enumerate(self.ks)
        ]

    def tail_slice(self, fraction):
        """Slice of the last `fraction` of snapshots (never empty)."""
        count = max(1, int(round(len(self.ks) * fraction)))
        return slice(len(self.ks) - count, len(self.ks))

    def tail_mean(self, series, fraction):
        return float(np.mean(getattr(self, series)[self.tail_slice(fraction)]))


@dataclass(frozen=True)
class FitReport:
    model: str
    defined: bool
    slope: float = None
    intercept: float = None
    sup: float = None
    median: float = None
    trend: float = None
    points: int = 0

    def as_dict(self):
        return {
            'model': str(self.model),
            'defined': self.defined,
            'slope': self.slope,
            'intercept': self.intercept,
            'sup': self.sup,
            'median': self.median,
            'trend': self.trend,
            'points': self.points,
        }
