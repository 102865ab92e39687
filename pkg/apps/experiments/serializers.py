"""
Experiment configuration serializers.
"""
from django.conf import settings
from rest_framework import serializers

from apps.core.utils import UINT64_MAX
from apps.engine.schedules import ScheduleKind
from apps.problems.serializers import ModelFamilySerializer
from .presets import Preset, definition_for

SCHEDULE_PARAMS = {
    ScheduleKind.CONSTANT: ('eta',),
    ScheduleKind.INVERSE_K: ('c', 'u'),
    ScheduleKind.THEOREM_DECAY: ('mu', 'L'),
}


class ScheduleSerializer(serializers.Serializer):
    """Step schedule: {kind, eta} | {kind, c, u} | {kind, mu, L}."""
    kind = serializers.ChoiceField(choices=ScheduleKind.choices)
    eta = serializers.FloatField(required=False)
    c = serializers.FloatField(required=False)
    u = serializers.FloatField(required=False)
    mu = serializers.FloatField(required=False)
    L = serializers.FloatField(required=False)

    def validate(self, attrs):
        kind = ScheduleKind(attrs['kind'])
        errors = {}
        for name in SCHEDULE_PARAMS[kind]:
            value = attrs.get(name)
            if value is None:
                errors[name] = f'required for a {kind.value} schedule.'
            elif not value > 0:
                errors[name] = 'must be positive.'
        if errors:
            raise serializers.ValidationError(errors)
        return {'kind': kind.value, **{name: attrs[name] for name in SCHEDULE_PARAMS[kind]}}


class ExperimentConfigSerializer(serializers.Serializer):
    """Experiment configuration; presets fix the model kind and the step sizes."""
    preset = serializers.ChoiceField(choices=Preset.choices, default=Preset.CUSTOM.value)
    model = ModelFamilySerializer(required=False)
    schedule = ScheduleSerializer(required=False, allow_null=True)
    num_iters = serializers.IntegerField(
        min_value=1, default=lambda: settings.PIGGYBACK['DEFAULT_ITERS'])
    stride = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)
    replications = serializers.IntegerField(
        min_value=1, default=lambda: settings.PIGGYBACK['DEFAULT_REPLICATIONS'])
    seed = serializers.IntegerField(min_value=0, max_value=UINT64_MAX, default=0)
    tail_fraction = serializers.FloatField(
        default=lambda: settings.PIGGYBACK['TAIL_FRACTION'])
    theorem_checks = serializers.BooleanField(default=False)

    def validate_tail_fraction(self, value):
        if not 0 < value <= 1:
            raise serializers.ValidationError('tail_fraction must lie in (0, 1].')
        return value

    def validate(self, attrs):
        preset = Preset(attrs['preset'])
        model = attrs.get('model')

        if preset == Preset.CUSTOM:
            if model is None:
                raise serializers.ValidationError({'model': 'custom runs need a model.'})
            if not attrs.get('schedule'):
                raise serializers.ValidationError({'schedule': 'custom runs need a schedule.'})
        else:
            kind = definition_for(preset).kind
            if model is None:
                family = ModelFamilySerializer(data={'kind': kind.value})
                family.is_valid(raise_exception=True)
                model = family.validated_data
            elif model['kind'] != kind:
                raise serializers.ValidationError(
                    {'model': f'{preset.value} uses the {kind.value} model, got {model["kind"]}.'})
            if attrs.get('schedule'):
                raise serializers.ValidationError({'schedule': f'{preset.value} fixes its step sizes.'})
            attrs['schedule'] = None

        attrs['model'] = dict(model)
        if attrs['stride'] is None:
            attrs['stride'] = max(1, attrs['num_iters'] // settings.PIGGYBACK['SNAPSHOTS_PER_RUN'])
        return attrs
