"""
Fixtures for experiment tests.
"""
import json

import factory
import pytest
from django.utils import timezone

from apps.experiments.models import ExperimentRun


class ExperimentRunFactory(factory.django.DjangoModelFactory):
    """Ledger rows for history and ledger tests."""

    class Meta:
        model = ExperimentRun

    command = ExperimentRun.Command.RUN
    preset = 'fig2-ridge'
    seed = factory.Sequence(lambda n: str(n))
    config = factory.LazyAttribute(lambda run: {'preset': run.preset, 'seed': int(run.seed)})
    status = ExperimentRun.Status.COMPLETED
    exit_code = 0
    started_at = factory.LazyFunction(timezone.now)
    completed_at = factory.LazyFunction(timezone.now)


@pytest.fixture
def experiment_run_factory(db):
    return ExperimentRunFactory


@pytest.fixture
def small_config():
    """Factory fixture for a validated config on a d=3, m=8 model."""
    def _small_config(preset='fig2-ridge', kind='ridge', **overrides):
        from apps.experiments.services import ExperimentConfig

        data = {'preset': preset, 'model': {'kind': kind, 'd': 3, 'm': 8}, 'num_iters': 50,
                'replications': 2, 'seed': 1}
        data.update(overrides)
        return ExperimentConfig.from_data(data)
    return _small_config


@pytest.fixture
def config_file(tmp_path):
    """Factory fixture writing a JSON config file."""
    def _config_file(data, name='config.json'):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding='utf-8')
        return path
    return _config_file


@pytest.fixture
def recording(settings):
    """Enable the run ledger."""
    settings.PIGGYBACK = {**settings.PIGGYBACK, 'RECORD_RUNS': True}
    return settings
