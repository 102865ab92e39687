"""
Management command to list recorded experiment runs.
"""
from django.core.management.base import BaseCommand

from apps.experiments.models import ExperimentRun
from apps.experiments.services import RunLedgerService


def _seconds(duration):
    return '-' if duration is None else f'{duration:.1f}s'


class Command(BaseCommand):
    help = 'List recent experiment runs from the ledger'

    def add_arguments(self, parser):
        parser.add_argument('--limit', type=int, default=20, help='Number of runs (default: 20)')
        parser.add_argument('--command', choices=ExperimentRun.Command.values, dest='run_command',
                            help='Only runs of this command')

    def handle(self, *args, **options):
        runs = RunLedgerService.recent(options['limit'], options.get('run_command'))
        if not runs:
            self.stdout.write('No recorded runs')
            return

        for run in runs:
            line = (f'{run.pk:>5}  {run.created_at:%Y-%m-%d %H:%M:%S}  {run.command:<8} '
                    f'{run.preset or "-":<20} seed={run.seed:<20} exit={run.exit_code} '
                    f'took={_seconds(run.duration)}')
            style = self.style.SUCCESS if run.status == ExperimentRun.Status.COMPLETED else self.style.ERROR
            self.stdout.write(style(line))
