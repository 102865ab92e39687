# Generated by Django 5.2 on 2026-10-19 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='created at')),
                ('updated_at', models.DateTimeField(auto_now=True, verbose_name='updated at')),
                ('command', models.CharField(choices=[('run', 'Experiment'), ('lemmas', 'Lemma suite'), ('fdcheck', 'Finite-difference check')], default='run', max_length=10, verbose_name='command')),
                ('preset', models.CharField(blank=True, max_length=30, verbose_name='preset')),
                ('seed', models.CharField(max_length=20, verbose_name='seed')),
                ('config', models.JSONField(default=dict, verbose_name='configuration')),
                ('status', models.CharField(choices=[('PENDING', 'Pending'), ('RUNNING', 'Running'), ('COMPLETED', 'Completed'), ('FAILED', 'Failed')], default='PENDING', max_length=10, verbose_name='status')),
                ('exit_code', models.IntegerField(blank=True, null=True, verbose_name='exit code')),
                ('output_dir', models.CharField(blank=True, max_length=500, verbose_name='output directory')),
                ('summary', models.JSONField(default=dict, verbose_name='summary')),
                ('error_message', models.TextField(blank=True, verbose_name='error message')),
                ('started_at', models.DateTimeField(blank=True, null=True, verbose_name='started at')),
                ('completed_at', models.DateTimeField(blank=True, null=True, verbose_name='completed at')),
            ],
            options={
                'verbose_name': 'experiment run',
                'verbose_name_plural': 'experiment runs',
                'db_table': 'experiment_runs',
                'ordering': ['-created_at'],
            },
        ),
    ]
