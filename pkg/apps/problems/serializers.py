"""
Model family serializers.
"""
from django.conf import settings
from rest_framework import serializers

from apps.core.utils import UINT64_MAX
from .families import ModelKind, OLS_KINDS


def _default(key):
    return lambda: settings.PIGGYBACK[key]


class ModelFamilySerializer(serializers.Serializer):
    """JSON description of a model family: {kind, d, m, seed, reg, huber_delta}."""
    kind = serializers.ChoiceField(choices=ModelKind.choices)
    d = serializers.IntegerField(min_value=1, default=_default('DEFAULT_D'))
    m = serializers.IntegerField(min_value=1, default=_default('DEFAULT_M'))
    seed = serializers.IntegerField(min_value=0, max_value=UINT64_MAX, default=0)
    reg = serializers.FloatField(min_value=0.0, required=False, allow_null=True, default=None)
    huber_delta = serializers.FloatField(default=_default('DEFAULT_HUBER_DELTA'))

    def validate_huber_delta(self, value):
        if not value > 0:
            raise serializers.ValidationError('huber_delta must be positive.')
        return value

    def validate(self, attrs):
        kind = ModelKind(attrs['kind'])
        if attrs['d'] > attrs['m']:
            raise serializers.ValidationError({'d': 'd must not exceed m (orthonormal data columns).'})

        reg = attrs.get('reg')
        if kind in OLS_KINDS:
            if reg not in (None, 0.0):
                raise serializers.ValidationError({'reg': f'{kind.value} takes no regularizer.'})
            attrs['reg'] = 0.0
        else:
            if reg is None:
                reg = settings.PIGGYBACK['DEFAULT_REG']
            if not reg > 0:
                raise serializers.ValidationError({'reg': f'{kind.value} needs reg > 0.'})
            attrs['reg'] = reg
        return attrs
