"""
Regime checks: does the aggregate behaviour match the rate theorem's prediction?
"""
import logging
from dataclasses import dataclass, field

from apps.metrics.curves import FitModel
from apps.metrics.services import MetricsService
from .presets import Regime

logger = logging.getLogger(__name__)

NOISE_BALL_SLOPE = (0.7, 1.3)
SUBLINEAR_SUP_FACTOR = 3.0
INTERP_FINAL = 1e-10
INTERP_SIGMA2 = 1e-20
PLATEAU_FACTOR = 1e3


@dataclass(frozen=True)
class RegimeResult:
    regime: str
    passed: bool = None
    details: dict = field(default_factory=dict)
    message: str = ''

    @property
    def failed(self):
        return self.passed is False

    def as_dict(self):
        return {
            'regime': str(self.regime),
            'passed': self.passed,
            'details': self.details,
            'message': self.message,
        }


class RegimeChecker:
    """Dispatch on the preset's regime. Each check takes the aggregates of every step size."""

    @staticmethod
    def check(regime, aggregates, etas, oracle, tail_fraction):
        regime = Regime(regime)
        if regime == Regime.NONE:
            return RegimeResult(regime=regime, message='no regime check for this preset')
        handler = {
            Regime.NOISE_BALL: RegimeChecker.noise_ball,
            Regime.SUBLINEAR: RegimeChecker.sublinear,
            Regime.DOUBLE_INTERP: RegimeChecker.double_interpolation,
            Regime.SIMPLE_INTERP: RegimeChecker.simple_interpolation,
        }[regime]
        result = handler(aggregates, etas, oracle, tail_fraction)
        log = logger.info if result.passed else logger.warning
        log(f'Regime {regime}: {"passed" if result.passed else "failed"} ({result.message})')
        return result

    @staticmethod
    def noise_ball(aggregates, etas, oracle, tail_fraction):
        """Tail Jacobian MSE grows linearly in eta: log-log slope within NOISE_BALL_SLOPE."""
        fit = MetricsService.fit_rate(FitModel.NOISE_BALL, aggregates, etas=etas,
                                      tail_fraction=tail_fraction)
        low, high = NOISE_BALL_SLOPE
        passed = fit.defined and low <= fit.slope <= high
        return RegimeResult(
            regime=Regime.NOISE_BALL,
            passed=passed,
            details={'fit': fit.as_dict()},
            message=f'slope {fit.slope!r}, expected in [{low}, {high}]' if fit.defined else 'fit undefined',
        )

    @staticmethod
    def sublinear(aggregates, etas, oracle, tail_fraction):
        """MSE_k (k + 8 kappa^2) / log^2(k + 8 kappa^2) over the tail half stays below 3x its median."""
        fit = MetricsService.fit_rate(FitModel.LOG_RATE, aggregates[0], tail_fraction=0.5,
                                      kappa=oracle.kappa)
        passed = fit.defined and fit.sup <= SUBLINEAR_SUP_FACTOR * fit.median
        return RegimeResult(
            regime=Regime.SUBLINEAR,
            passed=passed,
            details={'fit': fit.as_dict()},
            message=(f'sup {fit.sup!r} vs {SUBLINEAR_SUP_FACTOR} x median {fit.median!r}'
                     if fit.defined else 'fit undefined'),
        )

    @staticmethod
    def double_interpolation(aggregates, etas, oracle, tail_fraction):
        """sigma^2 = 0, both errors below INTERP_FINAL at the end, negative geometric slopes."""
        curve = aggregates[0]
        subopt_fit = MetricsService.fit_rate(FitModel.GEOMETRIC, curve, series='subopt_mean',
                                             tail_fraction=1.0)
        jac_fit = MetricsService.fit_rate(FitModel.GEOMETRIC, curve, series='jacerr_sq_mean',
                                          tail_fraction=1.0)
        final_subopt = float(curve.subopt_mean[-1])
        final_jac = float(curve.jacerr_sq_mean[-1])
        checks = {
            'sigma2_zero': oracle.sigma2 <= INTERP_SIGMA2,
            'subopt_final': final_subopt <= INTERP_FINAL,
            'jacerr_sq_final': final_jac <= INTERP_FINAL,
            'subopt_geometric': subopt_fit.defined and subopt_fit.slope < 0,
            'jacerr_sq_geometric': jac_fit.defined and jac_fit.slope < 0,
        }
        failed = [name for name, ok in checks.items() if not ok]
        return RegimeResult(
            regime=Regime.DOUBLE_INTERP,
            passed=not failed,
            details={
                'checks': checks,
                'sigma2': oracle.sigma2,
                'final_subopt': final_subopt,
                'final_jacerr_sq': final_jac,
                'subopt_fit': subopt_fit.as_dict(),
                'jacerr_sq_fit': jac_fit.as_dict(),
            },
            message='all checks passed' if not failed else f'failed: {", ".join(failed)}',
        )

    @staticmethod
    def simple_interpolation(aggregates, etas, oracle, tail_fraction):
        """Iterates converge while the Jacobian MSE plateaus far above the iterate MSE."""
        curve = aggregates[0]
        final_subopt = float(curve.subopt_mean[-1])
        tail_jac = curve.tail_mean('jacerr_sq_mean', tail_fraction)
        tail_iter = curve.tail_mean('itererr_sq_mean', tail_fraction)
        checks = {
            'subopt_final': final_subopt <= INTERP_FINAL,
            'jacobian_plateau': tail_jac > PLATEAU_FACTOR * tail_iter,
        }
        failed = [name for name, ok in checks.items() if not ok]
        return RegimeResult(
            regime=Regime.SIMPLE_INTERP,
            passed=not failed,
            details={
                'checks': checks,
                'final_subopt': final_subopt,
                'tail_jacerr_sq': tail_jac,
                'tail_itererr_sq': tail_iter,
                'sigma2_grad': oracle.sigma2_grad,
                'sigma2_jac': oracle.sigma2_jac,
            },
            message='all checks passed' if not failed else f'failed: {", ".join(failed)}',
        )
