"""
Tests for experiment services.
"""
import json

import numpy as np
import pytest

from apps.core.exceptions import ConfigurationError, UnsupportedModelError
from apps.core.export import ExportService
from apps.engine.schedules import ConstantStep, TheoremDecayStep
from apps.experiments.presets import STEP_FRACTIONS, Regime
from apps.experiments.services import (
    EXIT_NUMERICAL,
    EXIT_OK,
    ExperimentService,
    FDValidationService,
    LemmaSuiteService,
)
from apps.metrics.curves import CSV_COLUMNS


def _data_lines(path):
    lines = path.read_text(encoding='utf-8').splitlines()
    return [line for line in lines if not line.startswith('#')]


class TestExperimentRun:
    """Tests for ExperimentService.run."""

    def test_single_iteration_csv(self, small_config, tmp_path):
        """Test one replication of one iteration writes k = 0 and k = 1."""
        config = small_config('fig1-double-interp', 'ols-double-interp', num_iters=1, replications=1)
        result = ExperimentService.run(config, tmp_path)

        assert len(result.csv_paths) == 1
        lines = _data_lines(result.csv_paths[0])
        assert lines[0] == ','.join(CSV_COLUMNS)
        assert len(lines) == 3
        assert lines[1].startswith('0,')
        assert lines[2].startswith('1,')

    def test_header_records_config_and_seed(self, small_config, tmp_path):
        config = small_config(num_iters=5, replications=1)
        result = ExperimentService.run(config, tmp_path)
        header = [line for line in result.csv_paths[0].read_text().splitlines() if line.startswith('#')]

        keys = [line[2:].split(':', 1)[0] for line in header]
        assert keys[:3] == ['version', 'seed', 'config']
        assert json.loads(header[1].split(':', 1)[1]) == 1

    def test_sweep_writes_one_csv_per_step(self, small_config, tmp_path):
        config = small_config()
        result = ExperimentService.run(config, tmp_path)

        assert len(result.step_runs) == len(STEP_FRACTIONS)
        etas = [run.schedule.eta for run in result.step_runs]
        np.testing.assert_allclose(etas, [result.oracle.base_step * f for f in STEP_FRACTIONS])
        assert (tmp_path / 'fig2-ridge-step3.csv').exists()
        assert 'noise_ball' in result.fits

    def test_reruns_are_byte_identical(self, small_config, tmp_path):
        config = small_config(num_iters=200, replications=3)
        first = ExperimentService.run(config, tmp_path / 'a')
        second = ExperimentService.run(config, tmp_path / 'b')

        for left, right in zip(first.csv_paths, second.csv_paths):
            assert left.read_bytes() == right.read_bytes()
        assert first.summary_path.read_bytes() == second.summary_path.read_bytes()

    def test_summary(self, small_config, tmp_path):
        config = small_config(num_iters=100, replications=2)
        result = ExperimentService.run(config, tmp_path)
        summary = json.loads(result.summary_path.read_text())

        assert summary['header']['seed'] == 1
        assert summary['exit_code'] == result.exit_code
        assert summary['oracle']['kappa'] >= 1.0
        assert summary['admissibility']['kind'] == 'ridge'
        assert len(summary['steps']) == 4
        step = summary['steps'][0]
        assert step['effective_kappa'] == pytest.approx(summary['oracle']['kappa'])
        assert step['derivative_bound_violations'] == 0
        assert 'general_estimate' in step
        assert len(step['replication_seeds']) == 2

    def test_summary_reports_logistic_hessian_constant(self, small_config, tmp_path):
        config = small_config('fig2-logistic', 'logistic', num_iters=20, replications=1)
        result = ExperimentService.run(config, tmp_path)
        admissibility = result.summary['admissibility']

        assert admissibility['hessian_lipschitz_constant'] is not None
        assert admissibility['hessian_lipschitz_constant'] == pytest.approx(result.oracle.M)

    def test_decreasing_steps_report_effective_constants(self, small_config, tmp_path):
        config = small_config('fig1-decreasing', 'ols-standard', num_iters=20, replications=1)
        result = ExperimentService.run(config, tmp_path)

        assert isinstance(result.step_runs[0].schedule, TheoremDecayStep)
        constants = result.summary['steps'][0]['effective_constants']
        assert constants['kappa'] == pytest.approx(result.oracle.kappa)

    def test_ridge_decreasing_preset(self, small_config, tmp_path):
        """Test the ridge preset with theorem-decay steps runs the sublinear check."""
        config = small_config('fig2-ridge-decreasing', num_iters=200, replications=2)
        result = ExperimentService.run(config, tmp_path)

        schedule = result.step_runs[0].schedule
        assert len(result.step_runs) == 1
        assert isinstance(schedule, TheoremDecayStep)
        assert schedule.kappa == pytest.approx(result.oracle.kappa)
        assert result.regime.regime == Regime.SUBLINEAR
        assert result.regime.passed is not None
        assert 'sup' in result.regime.details['fit']

    def test_overflow_exit_code(self, small_config, tmp_path):
        config = small_config('custom', 'ridge', schedule={'kind': 'constant', 'eta': 100.0},
                              num_iters=2000, replications=1)
        with np.errstate(all='ignore'):
            result = ExperimentService.run(config, tmp_path)

        assert result.exit_code == EXIT_NUMERICAL
        assert result.error['error']['code'] == 'OVERFLOW'
        assert result.error['error']['details']['iteration'] >= 1
        assert json.loads(result.summary_path.read_text())['exit_code'] == EXIT_NUMERICAL

    def test_theorem_checks(self, small_config, tmp_path):
        config = small_config('custom', 'ridge', schedule={'kind': 'constant', 'eta': 0.5},
                              theorem_checks=True)
        with pytest.raises(ConfigurationError):
            ExperimentService.run(config, tmp_path)

    def test_non_smooth_preset_has_no_regime(self, small_config, tmp_path):
        config = small_config('fig2-svm', 'hinge', num_iters=50, replications=1)
        result = ExperimentService.run(config, tmp_path)

        assert result.exit_code == EXIT_OK
        assert result.regime.passed is None
        assert 'general_estimate' not in result.summary['steps'][0]


class TestReplications:
    """Tests for replication seeds and workers."""

    def test_seeds_distinct_and_reproducible(self, small_config):
        config = small_config(replications=5)
        seeds = ExperimentService.replication_seeds(config)
        assert len(set(seeds)) == 5
        assert seeds == ExperimentService.replication_seeds(config)

    def test_worker_count_does_not_change_results(self, small_config, settings):
        config = small_config(num_iters=100, replications=4)
        problem, theta, oracle = ExperimentService.prepare(config)
        schedule = ConstantStep(oracle.base_step)

        settings.PIGGYBACK = {**settings.PIGGYBACK, 'MAX_WORKERS': 1}
        serial, _, _ = ExperimentService.run_replications(problem, theta, oracle, schedule, config)
        settings.PIGGYBACK = {**settings.PIGGYBACK, 'MAX_WORKERS': 4}
        parallel, _, _ = ExperimentService.run_replications(problem, theta, oracle, schedule, config)

        for left, right in zip(serial, parallel):
            np.testing.assert_array_equal(left.jac_err, right.jac_err)


class TestSweepIterations:
    """Tests for ExperimentService.iterations_for."""

    def test_tail_starts_after_burn_in(self, small_config, settings):
        config = small_config('fig1-constant', 'ols-standard', num_iters=100, replications=1)
        _, _, oracle = ExperimentService.prepare(config)
        burn_in = settings.PIGGYBACK['SWEEP_BURN_IN']
        max_scale = settings.PIGGYBACK['SWEEP_MAX_SCALE']

        scales = []
        for schedule in ExperimentService.schedules_for(config, oracle):
            num_iters, stride = ExperimentService.iterations_for(config, schedule, oracle)
            scale = num_iters // config.num_iters
            scales.append(scale)
            assert num_iters == scale * config.num_iters
            assert stride == scale * config.stride
            tail_start = (1.0 - config.tail_fraction) * num_iters
            assert scale == max_scale or tail_start * oracle.mu * schedule.eta >= burn_in
        assert scales == sorted(scales)
        assert scales[-1] > 1

    def test_long_runs_are_not_scaled(self, small_config):
        config = small_config(num_iters=10**9, replications=1)
        _, _, oracle = ExperimentService.prepare(config)
        for schedule in ExperimentService.schedules_for(config, oracle):
            assert ExperimentService.iterations_for(config, schedule, oracle) == (config.num_iters, config.stride)

    def test_single_step_plans_are_not_scaled(self, small_config):
        config = small_config('fig1-double-interp', 'ols-double-interp', num_iters=10, replications=1)
        _, _, oracle = ExperimentService.prepare(config)
        schedule = ExperimentService.schedules_for(config, oracle)[0]
        assert ExperimentService.iterations_for(config, schedule, oracle) == (10, config.stride)

    def test_summary_reports_iterations(self, small_config, tmp_path):
        config = small_config('fig1-constant', 'ols-standard', num_iters=100, replications=1)
        result = ExperimentService.run(config, tmp_path)

        reported = [step['num_iters'] for step in result.summary['steps']]
        assert reported == [run.num_iters for run in result.step_runs]
        assert reported[-1] > 100
        ks = [int(line.split(',', 1)[0]) for line in _data_lines(result.csv_paths[-1])[1:]]
        assert ks[-1] == reported[-1]


class TestFDValidation:
    """Tests for FDValidationService."""

    def test_ols_preset(self):
        report = FDValidationService.run('fig1-constant', h=1e-2, seed=0, num_iters=50)
        assert report['passed']
        assert report['tolerance'] == 1e-9
        assert len(report['column_relative_errors']) == 100

    @pytest.mark.parametrize('preset', ['fig1-constant', 'fig1-simple-interp', 'fig1-double-interp'])
    def test_ols_presets_with_default_step(self, preset):
        """Test the affine families meet 1e-9 at the default step and iteration count."""
        report = FDValidationService.run(preset)
        assert report['h'] == 1.0
        assert report['num_iters'] == 1000
        assert report['max_relative_error'] <= 1e-9
        assert report['passed']

    def test_logistic_default_step(self):
        report = FDValidationService.run('fig2-logistic', num_iters=100)
        assert report['h'] == 1e-5
        assert report['tolerance'] == 1e-4
        assert report['passed']

    def test_non_smooth_preset(self):
        with pytest.raises(UnsupportedModelError):
            FDValidationService.run('fig2-huber', num_iters=10)


class TestLemmaSuite:
    """Tests for LemmaSuiteService."""

    def test_no_instances(self):
        records, all_hold = LemmaSuiteService.run(seed=0, instances_per_lemma=0, horizon=10)
        assert records == []
        assert all_hold

        text = ExportService.jsonl_text(records, LemmaSuiteService.report_header(0, 0, 10, 100))
        lines = text.splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])['header']['seed'] == 0

    def test_deterministic(self):
        runs = [LemmaSuiteService.run(seed=3, instances_per_lemma=2, horizon=1000, limsup_horizon=100_000)
                for _ in range(2)]
        header = LemmaSuiteService.report_header(3, 2, 1000, 100_000)
        texts = [ExportService.jsonl_text(records, header) for records, _ in runs]

        assert texts[0] == texts[1]
        records, all_hold = runs[0]
        assert all_hold
        assert [r['lemma'] for r in records] == ['c1-limsup'] * 2 + ['c2-iterates'] * 2 + \
            ['c3-derivatives'] * 2 + ['c4-linear'] * 2
