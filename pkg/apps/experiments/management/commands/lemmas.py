"""
Management command to run the randomized bound-domination suite.
"""
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.core.export import ExportService
from apps.experiments.models import ExperimentRun
from apps.experiments.services import EXIT_OK, EXIT_REGIME, LemmaSuiteService, RunLedgerService


class Command(BaseCommand):
    help = 'Check the recursion bounds on randomized admissible instances (JSON lines report)'

    def add_arguments(self, parser):
        parser.add_argument('--n', type=int, default=100, help='Instances per lemma (default: 100)')
        parser.add_argument('--horizon', type=int, default=100_000, help='Horizon of the rate lemmas')
        parser.add_argument('--limsup-horizon', type=int,
                            help='Horizon of the limsup lemma (default: PIGGYBACK C1_HORIZON)')
        parser.add_argument('--seed', type=int, default=0, help='Root seed')
        parser.add_argument('--out', type=Path, help='Report file (default: stdout)')
        parser.add_argument('--no-record', action='store_true', help='Do not record the run in the ledger')

    def handle(self, *args, **options):
        n, horizon, seed = options['n'], options['horizon'], options['seed']
        limsup_horizon = options.get('limsup_horizon') or settings.PIGGYBACK['C1_HORIZON']
        if n < 0 or horizon < 1 or limsup_horizon < 1:
            raise CommandError('--n must be >= 0 and horizons >= 1', returncode=1)

        config = {'n': n, 'horizon': horizon, 'limsup_horizon': limsup_horizon}
        ledger = RunLedgerService.start(ExperimentRun.Command.LEMMAS, seed, config,
                                        output_dir=options.get('out') or '',
                                        record=not options['no_record'])

        records, all_hold = LemmaSuiteService.run(seed, n, horizon, limsup_horizon)
        header = LemmaSuiteService.report_header(seed, n, horizon, limsup_horizon)
        if options.get('out'):
            path = ExportService.to_jsonl(records, options['out'], header)
            self.stderr.write(f'wrote {path}')
        else:
            self.stdout.write(ExportService.jsonl_text(records, header), ending='')

        failures = [r for r in records if not r['holds']]
        exit_code = EXIT_OK if all_hold else EXIT_REGIME
        RunLedgerService.finish(ledger, exit_code, {'instances': len(records), 'failures': len(failures)})
        if failures:
            first = failures[0]
            raise CommandError(
                f'{len(failures)} bound violations, first: {first["lemma"]} instance {first["index"]} '
                f'at k={first["first_violation"]}',
                returncode=EXIT_REGIME,
            )
        self.stderr.write(self.style.SUCCESS(f'All {len(records)} instances dominated'))
