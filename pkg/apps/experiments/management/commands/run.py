"""
Management command to run an experiment preset or a custom config.
"""
import json
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from apps.core.exceptions import PiggybackError, error_payload
from apps.core.export import ExportService
from apps.experiments.models import ExperimentRun
from apps.experiments.presets import Preset
from apps.experiments.services import (
    EXIT_CONFIG,
    EXIT_OK,
    ExperimentConfig,
    ExperimentService,
    RunLedgerService,
)

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run an experiment and write per-step-size CSV files plus a summary JSON'

    def add_arguments(self, parser):
        parser.add_argument('--preset', choices=Preset.values, help='Experiment preset')
        parser.add_argument('--config', type=Path, help='JSON config file mirroring ExperimentConfig')
        parser.add_argument('--out', type=Path, help='Output directory (default: PIGGYBACK OUTPUT_DIR)')
        parser.add_argument('--seed', type=int, help='Root seed')
        parser.add_argument('--iters', type=int, help='Iterations per run')
        parser.add_argument('--reps', type=int, help='Replications per step size')
        parser.add_argument('--stride', type=int, help='Snapshot stride')
        parser.add_argument('--no-record', action='store_true', help='Do not record the run in the ledger')

    def _config_data(self, options):
        data = {}
        if options.get('config'):
            try:
                data = json.loads(options['config'].read_text(encoding='utf-8'))
            except (OSError, json.JSONDecodeError) as exc:
                raise CommandError(f'Cannot read config {options["config"]}: {exc}', returncode=EXIT_CONFIG)
        overrides = {
            'preset': options.get('preset'),
            'seed': options.get('seed'),
            'num_iters': options.get('iters'),
            'replications': options.get('reps'),
            'stride': options.get('stride'),
        }
        data.update({key: value for key, value in overrides.items() if value is not None})
        if 'preset' not in data and 'model' not in data:
            raise CommandError('Give --preset or a --config with a model', returncode=EXIT_CONFIG)
        return data

    def handle(self, *args, **options):
        data = self._config_data(options)
        try:
            config = ExperimentConfig.from_data(data)
        except ValidationError as exc:
            details = error_payload(exc)['error'].get('details', exc.detail)
            raise CommandError(f'Invalid config: {ExportService.dumps(details, indent=None)}',
                               returncode=EXIT_CONFIG)

        out_dir = options.get('out') or Path(settings.PIGGYBACK['OUTPUT_DIR'])
        ledger = RunLedgerService.start(
            ExperimentRun.Command.RUN, config.seed, config.as_dict(), config.preset, out_dir,
            record=not options['no_record'],
        )
        self.stdout.write(f'Running {config.preset} (seed={config.seed}, iters={config.num_iters}, '
                          f'reps={config.replications}, stride={config.stride})')

        try:
            result = ExperimentService.run(config, out_dir)
        except PiggybackError as exc:
            RunLedgerService.finish(ledger, EXIT_CONFIG, error_message=exc.message)
            raise CommandError(f'{exc.code}: {exc.message}', returncode=EXIT_CONFIG)

        error_message = result.error['error']['message'] if result.error else ''
        RunLedgerService.finish(ledger, result.exit_code, result.summary, error_message)

        for path in result.csv_paths:
            self.stdout.write(f'  wrote {path}')
        self.stdout.write(f'  wrote {result.summary_path}')

        if result.exit_code == EXIT_OK:
            regime = result.regime.message if result.regime else ''
            self.stdout.write(self.style.SUCCESS(f'Completed {config.preset}: {regime}'))
            return
        if result.error:
            raise CommandError(error_message, returncode=result.exit_code)
        raise CommandError(f'Regime check failed: {result.regime.message}', returncode=result.exit_code)
