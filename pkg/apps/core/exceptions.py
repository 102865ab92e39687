"""
Exception hierarchy shared by every app.
"""


def error_payload(exc):
    """
    Render an exception in the standard error format used in summaries and
    command errors. Field-level validation errors go under details.
    """
    payload = {
        'success': False,
        'error': {
            'code': getattr(exc, 'code', exc.__class__.__name__),
            'message': getattr(exc, 'message', str(exc)),
        }
    }

    detail = getattr(exc, 'detail', None)
    if isinstance(detail, dict):
        payload['error']['code'] = exc.__class__.__name__
        payload['error']['message'] = 'invalid configuration'
        payload['error']['details'] = detail
    elif getattr(exc, 'details', None):
        payload['error']['details'] = exc.details

    return payload


class PiggybackError(Exception):
    """Base exception for domain errors."""
    def __init__(self, message, code='PIGGYBACK_ERROR'):
        self.message = message
        self.code = code
        super().__init__(message)

    @property
    def details(self):
        return {}


class SampleIndexError(PiggybackError, IndexError):
    """Exception raised when a sample index falls outside {1, ..., m}."""
    def __init__(self, xi, m):
        self.xi = xi
        self.m = m
        super().__init__(f'sample index {xi} outside 1..{m}', 'INDEX_OUT_OF_RANGE')

    @property
    def details(self):
        return {'xi': self.xi, 'm': self.m}


class DomainError(PiggybackError, ValueError):
    """Exception raised for non-finite or otherwise invalid numeric inputs."""
    def __init__(self, message):
        super().__init__(message, 'DOMAIN_ERROR')


class ConfigurationError(PiggybackError):
    """Exception raised for invalid schedules, instances or experiment configs."""
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message, 'CONFIGURATION_ERROR')

    @property
    def details(self):
        return {'field': self.field} if self.field else {}


class NumericalOverflowError(PiggybackError, OverflowError):
    """Exception raised when an iterate or Jacobian stops being finite."""
    def __init__(self, iteration, what='state'):
        self.iteration = iteration
        super().__init__(f'non-finite {what} at iteration {iteration}', 'OVERFLOW')

    @property
    def details(self):
        return {'iteration': self.iteration}


class OracleFailure(PiggybackError):
    """Exception raised when the solution oracle cannot reach its tolerance."""
    def __init__(self, message, code='ORACLE_FAILURE'):
        super().__init__(message, code)


class RankError(OracleFailure):
    """Exception raised when the Hessian of the full objective is singular."""
    def __init__(self, message='Hessian of the full objective is not positive definite'):
        super().__init__(message, 'RANK_ERROR')


class UnsupportedModelError(PiggybackError):
    """Exception raised when an operation needs a property the model lacks."""
    def __init__(self, kind, requirement):
        self.kind = kind
        super().__init__(f'{kind} model does not provide {requirement}', 'UNSUPPORTED_MODEL')


class ShapeError(PiggybackError, ValueError):
    """Exception raised for mismatched array shapes or snapshot grids."""
    def __init__(self, message):
        super().__init__(message, 'SHAPE_ERROR')
