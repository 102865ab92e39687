"""
Tests for the exception hierarchy and the error payload.
"""
from rest_framework import serializers

from apps.core.exceptions import (
    ConfigurationError,
    NumericalOverflowError,
    OracleFailure,
    SampleIndexError,
    error_payload,
)


class TestErrorPayload:
    """Tests for error_payload function."""

    def test_domain_error(self):
        payload = error_payload(OracleFailure('no convergence'))

        assert payload['success'] is False
        assert payload['error'] == {'code': 'ORACLE_FAILURE', 'message': 'no convergence'}

    def test_overflow_details(self):
        payload = error_payload(NumericalOverflowError(7))

        assert payload['error']['code'] == 'OVERFLOW'
        assert payload['error']['details'] == {'iteration': 7}

    def test_configuration_field(self):
        assert error_payload(ConfigurationError('bad eta', field='eta'))['error']['details'] == {'field': 'eta'}
        assert 'details' not in error_payload(ConfigurationError('bad config'))['error']

    def test_sample_index(self):
        payload = error_payload(SampleIndexError(0, 5))
        assert payload['error']['details'] == {'xi': 0, 'm': 5}

    def test_validation_error_details(self):
        """Test serializer field errors are folded into details."""
        exc = serializers.ValidationError({'model': ['custom runs need a model.']})
        payload = error_payload(exc)

        assert payload['error']['code'] == 'ValidationError'
        assert payload['error']['details'] == {'model': ['custom runs need a model.']}

    def test_plain_exception(self):
        payload = error_payload(RuntimeError('boom'))
        assert payload['error'] == {'code': 'RuntimeError', 'message': 'boom'}
