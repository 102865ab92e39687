"""
Metrics services.
"""
import logging
import math

import numpy as np
from django.conf import settings

from apps.core.exceptions import ConfigurationError, ShapeError
from .curves import AggregateCurve, ErrorCurve, FitModel, FitReport

logger = logging.getLogger(__name__)


def _least_squares(xs, ys):
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)


class MetricsService:
    """Error curve business logic service."""

    @staticmethod
    def evaluate_curve(trajectory, problem, theta, oracle):
        """F(x_k) - F(x*), ||D_k - D*||_F and ||x_k - x*|| at every snapshot."""
        f_star = problem.objective(oracle.x_star, theta)
        subopt = np.array([problem.objective(x, theta) - f_star for x in trajectory.xs])
        jac_err = np.linalg.norm((trajectory.Ds - oracle.D_star).reshape(len(trajectory), -1), axis=1)
        iter_err = np.linalg.norm(trajectory.xs - oracle.x_star, axis=1)
        return ErrorCurve(ks=np.asarray(trajectory.ks), subopt=subopt, jac_err=jac_err, iter_err=iter_err)

    @staticmethod
    def aggregate(curves):
        """
        Pointwise means and standard errors over replications; the standard
        error is the sample standard deviation over sqrt(R), 0 when R = 1.
        """
        curves = list(curves)
        if not curves:
            raise ShapeError('cannot aggregate an empty list of curves')
        ks = curves[0].ks
        for curve in curves[1:]:
            if not np.array_equal(curve.ks, ks):
                raise ShapeError('curves have different snapshot indices')

        R = len(curves)

        def stats(values):
            values = np.vstack(values)
            mean = values.mean(axis=0)
            if R == 1:
                return mean, np.zeros_like(mean)
            return mean, values.std(axis=0, ddof=1) / math.sqrt(R)

        subopt_mean, subopt_se = stats([c.subopt for c in curves])
        jacerr_mean, jacerr_se = stats([c.jac_err for c in curves])
        jacerr_sq_mean, jacerr_sq_se = stats([c.jac_err ** 2 for c in curves])
        itererr_sq_mean, itererr_sq_se = stats([c.iter_err ** 2 for c in curves])

        return AggregateCurve(
            ks=np.asarray(ks),
            subopt_mean=subopt_mean,
            subopt_se=subopt_se,
            jacerr_mean=jacerr_mean,
            jacerr_se=jacerr_se,
            jacerr_sq_mean=jacerr_sq_mean,
            jacerr_sq_se=jacerr_sq_se,
            itererr_sq_mean=itererr_sq_mean,
            itererr_sq_se=itererr_sq_se,
            replications=R,
        )

    @staticmethod
    def fit_power_law(xs, ys):
        """Log-log slope of ys against xs; undefined unless all ys are positive."""
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if len(xs) < 2 or not np.all(ys > 0):
            return FitReport(model=FitModel.NOISE_BALL, defined=False, points=len(xs))
        slope, intercept = _least_squares(np.log(xs), np.log(ys))
        return FitReport(model=FitModel.NOISE_BALL, defined=True, slope=slope,
                         intercept=intercept, points=len(xs))

    @staticmethod
    def fit_geometric(ks, values):
        """Least-squares slope of log(values) against k over the positive entries."""
        ks = np.asarray(ks, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        positive = values > 0
        if positive.sum() < 2:
            return FitReport(model=FitModel.GEOMETRIC, defined=False, points=int(positive.sum()))
        slope, intercept = _least_squares(ks[positive], np.log(values[positive]))
        return FitReport(model=FitModel.GEOMETRIC, defined=True, slope=slope,
                         intercept=intercept, points=int(positive.sum()))

    @staticmethod
    def fit_log_rate(ks, values, kappa):
        """
        Statistic s_k = MSE_k (k + 8 kappa^2) / log^2(k + 8 kappa^2): its sup,
        median and the slope of log s against log(k + 8 kappa^2).
        """
        ks = np.asarray(ks, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if not np.any(values > 0):
            return FitReport(model=FitModel.LOG_RATE, defined=False, points=len(ks))
        shifted = ks + 8.0 * kappa * kappa
        statistic = values * shifted / np.log(shifted) ** 2
        positive = statistic > 0
        trend = None
        if positive.sum() >= 2:
            trend, _ = _least_squares(np.log(shifted[positive]), np.log(statistic[positive]))
        return FitReport(
            model=FitModel.LOG_RATE,
            defined=True,
            sup=float(np.max(statistic)),
            median=float(np.median(statistic)),
            trend=trend,
            points=len(ks),
        )

    @staticmethod
    def fit_rate(model, curve, series='jacerr_sq_mean', tail_fraction=None, etas=None, kappa=None):
        """
        Fit one of the rate models. noise-ball-vs-eta takes a list of curves
        (one per step size) and their etas; the others take a single curve.
        """
        model = FitModel(model)
        if tail_fraction is None:
            tail_fraction = settings.PIGGYBACK['TAIL_FRACTION']

        if model == FitModel.NOISE_BALL:
            if etas is None or len(etas) != len(curve):
                raise ConfigurationError('noise-ball fit needs one step size per curve', field='etas')
            tails = [c.tail_mean(series, tail_fraction) for c in curve]
            return MetricsService.fit_power_law(etas, tails)

        window = curve.tail_slice(tail_fraction)
        ks = curve.ks[window]
        values = getattr(curve, series)[window]
        if model == FitModel.GEOMETRIC:
            return MetricsService.fit_geometric(ks, values)
        if kappa is None:
            raise ConfigurationError('log-rate fit needs kappa', field='kappa')
        return MetricsService.fit_log_rate(ks, values, kappa)
