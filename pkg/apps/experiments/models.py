"""
Experiment run ledger.
"""
from django.db import models

from apps.core.models import TimeStampedModel


class ExperimentRun(TimeStampedModel):
    """One invocation of an experiment command and its outcome."""

    class Command(models.TextChoices):
        RUN = 'run', 'Experiment'
        LEMMAS = 'lemmas', 'Lemma suite'
        FDCHECK = 'fdcheck', 'Finite-difference check'

    class Status(models.TextChoices):
        PENDING = 'PENDING', 'Pending'
        RUNNING = 'RUNNING', 'Running'
        COMPLETED = 'COMPLETED', 'Completed'
        FAILED = 'FAILED', 'Failed'

    command = models.CharField(max_length=10, choices=Command.choices, default=Command.RUN,
                               verbose_name='command')
    preset = models.CharField(max_length=30, blank=True, verbose_name='preset')
    # Seeds are unsigned 64-bit, beyond the range of a signed BigIntegerField.
    seed = models.CharField(max_length=20, verbose_name='seed')
    config = models.JSONField(default=dict, verbose_name='configuration')
    status = models.CharField(max_length=10, choices=Status.choices, default=Status.PENDING,
                              verbose_name='status')
    exit_code = models.IntegerField(null=True, blank=True, verbose_name='exit code')
    output_dir = models.CharField(max_length=500, blank=True, verbose_name='output directory')
    summary = models.JSONField(default=dict, verbose_name='summary')
    error_message = models.TextField(blank=True, verbose_name='error message')
    started_at = models.DateTimeField(null=True, blank=True, verbose_name='started at')
    completed_at = models.DateTimeField(null=True, blank=True, verbose_name='completed at')

    class Meta:
        db_table = 'experiment_runs'
        verbose_name = 'experiment run'
        verbose_name_plural = 'experiment runs'
        ordering = ['-created_at']

    def __str__(self):
        return f'{self.command} {self.preset or "-"} seed={self.seed} ({self.status})'

    @property
    def duration(self):
        if self.started_at and self.completed_at:
            return (self.completed_at - self.started_at).total_seconds()
        return None
