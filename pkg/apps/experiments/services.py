"""
Experiment services: presets, replications, lemma suite, finite-difference check
and the run ledger.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone

from apps.core.exceptions import (
    NumericalOverflowError,
    OracleFailure,
    UnsupportedModelError,
    error_payload,
)
from apps.core.export import ExportService
from apps.core.utils import derive_seed
from apps.engine.schedules import ConstantStep, TheoremDecayStep, build_schedule
from apps.engine.services import EngineService
from apps.metrics.curves import CSV_COLUMNS, FitModel
from apps.metrics.services import MetricsService
from apps.oracle.services import OracleService
from apps.problems.families import OLS_KINDS
from apps.problems.services import ProblemService
from apps.sampling.streams import SampleStream
from apps.theory.bounds import LemmaKind
from apps.theory.services import TheoryService
from .models import ExperimentRun
from .presets import STEP_FRACTIONS, Preset, StepPlan, definition_for
from .regimes import RegimeChecker, RegimeResult

logger = logging.getLogger(__name__)

# Child-seed key of the replication streams.
REPLICATION_KEY = 2

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_REGIME = 2
EXIT_NUMERICAL = 3

SUITE_LEMMAS = (
    LemmaKind.C1_LIMSUP,
    LemmaKind.C2_ITERATES,
    LemmaKind.C3_DERIVATIVES,
    LemmaKind.C4_LINEAR,
)


def package_version():
    return settings.PIGGYBACK['VERSION']


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    model: dict
    schedule: dict
    num_iters: int
    stride: int
    replications: int
    seed: int
    tail_fraction: float
    theorem_checks: bool = False

    @classmethod
    def from_data(cls, data):
        """Validate a JSON-like config; raises rest_framework ValidationError."""
        from .serializers import ExperimentConfigSerializer

        serializer = ExperimentConfigSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        return cls(**serializer.validated_data)

    @property
    def definition(self):
        return definition_for(self.preset, self.model['kind'])

    def as_dict(self):
        return {
            'preset': str(self.preset),
            'model': {key: value for key, value in self.model.items()},
            'schedule': self.schedule,
            'num_iters': self.num_iters,
            'stride': self.stride,
            'replications': self.replications,
            'seed': self.seed,
            'tail_fraction': self.tail_fraction,
            'theorem_checks': self.theorem_checks,
        }


@dataclass
class StepRun:
    index: int
    schedule: object
    aggregate: object
    replication_seeds: list
    num_iters: int = 0
    bound_violations: int = 0
    path: Path = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    exit_code: int = EXIT_OK
    theta: object = None
    oracle: object = None
    step_runs: list = field(default_factory=list)
    regime: RegimeResult = None
    fits: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    summary_path: Path = None
    error: dict = None

    @property
    def csv_paths(self):
        return [run.path for run in self.step_runs if run.path is not None]


class ExperimentService:
    """Experiment business logic service."""

    @staticmethod
    def prepare(config):
        """Model, parameter and oracle of a config."""
        problem = ProblemService.build_problem(**config.model)
        theta = ProblemService.sample_theta(problem, config.seed)
        oracle = OracleService.solve(problem, theta)
        return problem, theta, oracle

    @staticmethod
    def schedules_for(config, oracle):
        plan = config.definition.steps
        if plan == StepPlan.SWEEP:
            schedules = [ConstantStep(oracle.base_step * fraction) for fraction in STEP_FRACTIONS]
        elif plan == StepPlan.BASE:
            schedules = [ConstantStep(oracle.base_step)]
        elif plan == StepPlan.THEOREM_DECAY:
            schedules = [TheoremDecayStep.for_constants(oracle.mu, oracle.L)]
        else:
            schedules = [build_schedule(**config.schedule)]

        if config.theorem_checks:
            for schedule in schedules:
                schedule.check(oracle.mu, oracle.L)
        return schedules

    @staticmethod
    def iterations_for(config, schedule, oracle):
        """
        (num_iters, stride) of one schedule. Sweep steps whose Jacobian transient
        would reach into the tail window get more iterations: the tail starts no
        earlier than SWEEP_BURN_IN / (mu eta), up to SWEEP_MAX_SCALE x num_iters.
        The snapshot count stays the same.
        """
        num_iters, stride = config.num_iters, config.stride
        tail_start = 1.0 - config.tail_fraction
        if config.definition.steps != StepPlan.SWEEP or tail_start <= 0:
            return num_iters, stride
        needed = settings.PIGGYBACK['SWEEP_BURN_IN'] / (oracle.mu * schedule.initial_step * tail_start)
        scale = min(max(1, math.ceil(needed / num_iters)), settings.PIGGYBACK['SWEEP_MAX_SCALE'])
        if scale > 1:
            logger.info(f'{schedule.schedule_id}: {scale} x {num_iters} iterations to clear the transient')
        return num_iters * scale, stride * scale

    @staticmethod
    def replication_seeds(config):
        return [derive_seed(config.seed, REPLICATION_KEY, rep) for rep in range(config.replications)]

    @staticmethod
    def run_replications(problem, theta, oracle, schedule, config, num_iters=None, stride=None):
        """
        Run every replication of one schedule concurrently and return their
        error curves and bound violations, ordered by replication index.
        """
        if num_iters is None:
            num_iters, stride = config.num_iters, config.stride
        seeds = ExperimentService.replication_seeds(config)
        bound = None
        admissible = ProblemService.check_assumptions(problem, theta).admissible
        if admissible and schedule.initial_step <= oracle.mu / oracle.L ** 2:
            bound = EngineService.derivative_bound(problem.p, oracle.kappa)

        def replicate(seed):
            trajectory = EngineService.run(
                problem, theta, schedule, SampleStream(seed, problem.m),
                num_iters, stride, derivative_bound=bound,
            )
            curve = MetricsService.evaluate_curve(trajectory, problem, theta, oracle)
            return curve, len(trajectory.bound_violations)

        workers = max(1, min(settings.PIGGYBACK['MAX_WORKERS'], len(seeds)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(replicate, seeds))
        logger.info(f'Finished {len(seeds)} replications of {schedule.schedule_id}')
        return [curve for curve, _ in results], sum(count for _, count in results), seeds

    @staticmethod
    def fit_all(config, step_runs, oracle):
        fits = {}
        if len(step_runs) > 1 and all(isinstance(r.schedule, ConstantStep) for r in step_runs):
            fits['noise_ball'] = MetricsService.fit_rate(
                FitModel.NOISE_BALL, [r.aggregate for r in step_runs],
                etas=[r.schedule.eta for r in step_runs], tail_fraction=config.tail_fraction,
            ).as_dict()
        for run in step_runs:
            fits[f'step{run.index}_geometric'] = MetricsService.fit_rate(
                FitModel.GEOMETRIC, run.aggregate, tail_fraction=config.tail_fraction).as_dict()
            fits[f'step{run.index}_log_rate'] = MetricsService.fit_rate(
                FitModel.LOG_RATE, run.aggregate, tail_fraction=config.tail_fraction,
                kappa=oracle.kappa).as_dict()
        return fits

    @staticmethod
    def step_summary(run, problem, oracle, config):
        schedule = run.schedule
        entry = {
            'index': run.index,
            'schedule': schedule.as_dict(),
            'schedule_id': schedule.schedule_id,
            'initial_step': schedule.initial_step,
            'num_iters': run.num_iters,
            'csv': run.path.name if run.path else None,
            'replication_seeds': run.replication_seeds,
            'derivative_bound_violations': run.bound_violations,
            'tail_jacerr_sq_mean': run.aggregate.tail_mean('jacerr_sq_mean', config.tail_fraction),
            'tail_subopt_mean': run.aggregate.tail_mean('subopt_mean', config.tail_fraction),
            'tail_itererr_sq_mean': run.aggregate.tail_mean('itererr_sq_mean', config.tail_fraction),
        }
        if isinstance(schedule, ConstantStep):
            entry['effective_kappa'] = schedule.effective_kappa(oracle.L)
            if oracle.M is not None and problem.twice_differentiable:
                entry['general_estimate'] = TheoryService.general_estimate(
                    oracle.mu, oracle.kappa, oracle.sigma2, schedule.eta, oracle.M, problem.p)
        else:
            mu, kappa, L = schedule.effective_constants()
            entry['effective_constants'] = {'mu': mu, 'kappa': kappa, 'L': L}
        return entry

    @staticmethod
    def run(config, out_dir):
        """
        Execute a config: solve the oracle, run every step size, write one CSV
        per step size and a summary JSON. Oracle and overflow failures end up
        in the summary with exit code 3; a failed regime check gives exit code 2.
        """
        out_dir = Path(out_dir)
        header = ExportService.build_header(package_version(), config.as_dict(), config.seed)
        result = ExperimentResult(config=config)
        problem = None

        try:
            problem, theta, oracle = ExperimentService.prepare(config)
            result.theta = theta
            result.oracle = oracle
            for index, schedule in enumerate(ExperimentService.schedules_for(config, oracle)):
                num_iters, stride = ExperimentService.iterations_for(config, schedule, oracle)
                curves, violations, seeds = ExperimentService.run_replications(
                    problem, theta, oracle, schedule, config, num_iters, stride)
                run = StepRun(index=index, schedule=schedule, aggregate=MetricsService.aggregate(curves),
                              replication_seeds=seeds, num_iters=num_iters, bound_violations=violations)
                run.path = ExportService.to_csv(
                    run.aggregate.rows(),
                    out_dir / f'{config.preset}-step{index}.csv',
                    CSV_COLUMNS,
                    {**header, 'schedule': schedule.as_dict(), 'replication_seeds': seeds},
                )
                logger.info(f'Wrote {run.path}')
                result.step_runs.append(run)

            result.regime = RegimeChecker.check(
                config.definition.regime,
                [run.aggregate for run in result.step_runs],
                [run.schedule.initial_step for run in result.step_runs],
                oracle,
                config.tail_fraction,
            )
            result.fits = ExperimentService.fit_all(config, result.step_runs, oracle)
            result.exit_code = EXIT_REGIME if result.regime.failed else EXIT_OK
        except (OracleFailure, NumericalOverflowError) as exc:
            logger.error(f'Experiment {config.preset} failed: {exc}')
            result.error = error_payload(exc)
            result.exit_code = EXIT_NUMERICAL

        result.summary = ExperimentService.build_summary(result, problem)
        result.summary_path = ExportService.to_json(
            result.summary, out_dir / f'{config.preset}-summary.json', header)
        return result

    @staticmethod
    def build_summary(result, problem):
        config = result.config
        summary = {
            'preset': str(config.preset),
            'exit_code': result.exit_code,
            'error': result.error,
        }
        if problem is not None:
            summary['model_id'] = problem.model_id
            summary['admissibility'] = ProblemService.check_assumptions(problem, result.theta).as_dict()
        if result.oracle is not None:
            summary['oracle'] = result.oracle.as_dict()
        summary['steps'] = [
            ExperimentService.step_summary(run, problem, result.oracle, config)
            for run in result.step_runs
        ]
        summary['fits'] = result.fits
        summary['regime'] = result.regime.as_dict() if result.regime else None
        return summary


class FDValidationService:
    """Forward Jacobian against common-random-number path differences."""

    @staticmethod
    def tolerance(problem):
        return 1e-9 if problem.kind in OLS_KINDS else 1e-4

    @staticmethod
    def default_step(problem):
        """Round-off grows like eps / h, so the affine OLS families use a unit step."""
        if problem.kind in OLS_KINDS:
            return settings.PIGGYBACK['FD_STEP_AFFINE']
        return settings.PIGGYBACK['FD_STEP']

    @staticmethod
    def run(preset, h=None, seed=0, num_iters=None):
        if num_iters is None:
            num_iters = settings.PIGGYBACK['FD_ITERS']
        config = ExperimentConfig.from_data({'preset': preset, 'seed': seed, 'num_iters': num_iters,
                                             'replications': 1})
        problem, theta, oracle = ExperimentService.prepare(config)
        if not problem.twice_differentiable:
            raise UnsupportedModelError(problem.kind, 'twice-differentiable losses')
        if h is None:
            h = FDValidationService.default_step(problem)

        schedule = ConstantStep(oracle.base_step)
        forward = EngineService.run(problem, theta, schedule, SampleStream(seed, problem.m),
                                    num_iters, stride=num_iters).final.D
        differenced = EngineService.jacobian_by_path_fd(problem, theta, schedule, seed, num_iters, h)
        errors = EngineService.column_relative_errors(forward, differenced)
        max_error = float(np.max(errors))
        tolerance = FDValidationService.tolerance(problem)
        logger.info(f'Finite-difference check on {problem.model_id}: max relative error {max_error:.3e}')
        return {
            'preset': str(preset),
            'model_id': problem.model_id,
            'seed': seed,
            'h': h,
            'num_iters': num_iters,
            'schedule': schedule.as_dict(),
            'max_relative_error': max_error,
            'column_relative_errors': errors,
            'tolerance': tolerance,
            'passed': max_error <= tolerance,
        }


class LemmaSuiteService:
    """Randomized domination checks of the recursion bounds."""

    @staticmethod
    def run(seed, instances_per_lemma, horizon, limsup_horizon=None):
        """Return (records, all_hold); records are ordered by lemma then instance."""
        if limsup_horizon is None:
            limsup_horizon = settings.PIGGYBACK['C1_HORIZON']
        records = []
        for position, kind in enumerate(SUITE_LEMMAS):
            rng = np.random.default_rng(derive_seed(seed, position))
            steps = limsup_horizon if kind == LemmaKind.C1_LIMSUP else horizon
            for index in range(instances_per_lemma):
                instance = TheoryService.random_instance(kind, rng)
                report = TheoryService.verify_domination(kind, instance, steps)
                records.append({
                    'lemma': kind.value,
                    'index': index,
                    'instance': instance.as_dict(),
                    **report.as_dict(),
                })
            logger.info(f'Lemma {kind}: {instances_per_lemma} instances checked')
        return records, all(record['holds'] for record in records)

    @staticmethod
    def report_header(seed, instances_per_lemma, horizon, limsup_horizon):
        config = {
            'instances_per_lemma': instances_per_lemma,
            'horizon': horizon,
            'limsup_horizon': limsup_horizon,
        }
        return ExportService.build_header(package_version(), config, seed)


class RunLedgerService:
    """Records command invocations in the ExperimentRun table."""

    @staticmethod
    def enabled(record=True):
        return record and settings.PIGGYBACK['RECORD_RUNS']

    @staticmethod
    def start(command, seed, config=None, preset='', output_dir='', record=True):
        if not RunLedgerService.enabled(record):
            return None
        try:
            return ExperimentRun.objects.create(
                command=command,
                preset=str(preset or ''),
                seed=str(seed),
                config=ExportService.to_plain(config or {}),
                output_dir=str(output_dir),
                status=ExperimentRun.Status.RUNNING,
                started_at=timezone.now(),
            )
        except DatabaseError as exc:
            logger.warning(f'Run ledger unavailable, not recording: {exc}')
            return None

    @staticmethod
    def finish(run, exit_code, summary=None, error_message=''):
        if run is None:
            return None
        run.exit_code = exit_code
        run.status = ExperimentRun.Status.COMPLETED if exit_code == EXIT_OK else ExperimentRun.Status.FAILED
        run.summary = ExportService.to_plain(summary or {})
        run.error_message = error_message
        run.completed_at = timezone.now()
        try:
            run.save()
        except DatabaseError as exc:
            logger.warning(f'Could not update run {run.pk}: {exc}')
        return run

    @staticmethod
    def recent(limit=20, command=None):
        queryset = ExperimentRun.objects.all()
        if command:
            queryset = queryset.filter(command=command)
        return list(queryset[:limit])
