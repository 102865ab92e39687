"""
Management command to compare the forward Jacobian with path finite differences.
"""
from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import NumericalOverflowError, OracleFailure, PiggybackError
from apps.core.export import ExportService
from apps.experiments.models import ExperimentRun
from apps.experiments.presets import Preset
from apps.experiments.services import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_REGIME,
    FDValidationService,
    RunLedgerService,
)


class Command(BaseCommand):
    help = 'Validate the forward Jacobian against common-random-number central differences'

    def add_arguments(self, parser):
        parser.add_argument('--preset', required=True,
                            choices=[p for p in Preset.values if p != Preset.CUSTOM])
        parser.add_argument('--h', type=float, help='Finite-difference step (default: FD_STEP_AFFINE for OLS, FD_STEP otherwise)')
        parser.add_argument('--seed', type=int, default=0, help='Seed of the model and the stream')
        parser.add_argument('--iters', type=int, help='Iterations (default: PIGGYBACK FD_ITERS)')
        parser.add_argument('--no-record', action='store_true', help='Do not record the run in the ledger')

    def handle(self, *args, **options):
        h = options.get('h')
        config = {'preset': options['preset'], 'h': h, 'iters': options.get('iters')}
        ledger = RunLedgerService.start(ExperimentRun.Command.FDCHECK, options['seed'], config,
                                        preset=options['preset'], record=not options['no_record'])
        try:
            report = FDValidationService.run(options['preset'], h, options['seed'], options.get('iters'))
        except (OracleFailure, NumericalOverflowError) as exc:
            RunLedgerService.finish(ledger, EXIT_NUMERICAL, error_message=exc.message)
            raise CommandError(f'{exc.code}: {exc.message}', returncode=EXIT_NUMERICAL)
        except PiggybackError as exc:
            RunLedgerService.finish(ledger, EXIT_CONFIG, error_message=exc.message)
            raise CommandError(f'{exc.code}: {exc.message}', returncode=EXIT_CONFIG)

        self.stdout.write(ExportService.dumps(report))
        exit_code = EXIT_OK if report['passed'] else EXIT_REGIME
        RunLedgerService.finish(ledger, exit_code, report)
        if not report['passed']:
            raise CommandError(
                f'max relative error {report["max_relative_error"]:.3e} above {report["tolerance"]:g}',
                returncode=EXIT_REGIME,
            )
