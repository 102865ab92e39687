"""
Management command to print the oracle solution and constants of a preset.
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import OracleFailure
from apps.core.export import ExportService
from apps.experiments.presets import Preset
from apps.experiments.services import (
    EXIT_NUMERICAL,
    ExperimentConfig,
    ExperimentService,
    package_version,
)
from apps.problems.services import ProblemService

ORACLE_FIELDS = ('x_star', 'D_star', 'mu', 'L', 'kappa', 'sigma2_grad', 'sigma2_jac', 'M')


class Command(BaseCommand):
    help = 'Solve the oracle of a preset and print {x_star, D_star, mu, L, kappa, sigma2_grad, sigma2_jac, M}'

    def add_arguments(self, parser):
        parser.add_argument('--preset', required=True,
                            choices=[p for p in Preset.values if p != Preset.CUSTOM])
        parser.add_argument('--seed', type=int, default=0, help='Seed of the model and theta')
        parser.add_argument('--out', type=Path, help='Also write the JSON to this file')

    def handle(self, *args, **options):
        config = ExperimentConfig.from_data({'preset': options['preset'], 'seed': options['seed']})
        try:
            problem, theta, oracle = ExperimentService.prepare(config)
        except OracleFailure as exc:
            raise CommandError(f'{exc.code}: {exc.message}', returncode=EXIT_NUMERICAL)

        solution = oracle.as_dict()
        data = {name: solution[name] for name in ORACLE_FIELDS}
        data['sigma2'] = oracle.sigma2
        data['grad_norm'] = oracle.grad_norm
        data['ift_residual'] = oracle.ift_residual
        data['model_id'] = problem.model_id
        data['admissibility'] = ProblemService.check_assumptions(problem, theta).as_dict()

        self.stdout.write(ExportService.dumps(data))
        if options.get('out'):
            header = ExportService.build_header(
                package_version(), config.as_dict(), config.seed)
            ExportService.to_json(data, options['out'], header)
