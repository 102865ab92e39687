"""
Django base settings for the piggyback project.
"""
import os
from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-change-this-in-production')

# Application definition
DJANGO_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
]

THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    'apps.core',
    'apps.problems',
    'apps.sampling',
    'apps.engine',
    'apps.oracle',
    'apps.theory',
    'apps.metrics',
    'apps.experiments',
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework (serializers only, used for config validation)
REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
}

# Experiment defaults
PIGGYBACK = {
    'VERSION': '1.0.0',
    # Model zoo defaults (m samples, d features, ridge weight, Huber threshold)
    'DEFAULT_M': 100,
    'DEFAULT_D': 10,
    'DEFAULT_REG': 0.05,
    'DEFAULT_HUBER_DELTA': 0.1,
    # Harness
    'DEFAULT_ITERS': config('PIGGYBACK_ITERS', default=100_000, cast=int),
    'DEFAULT_REPLICATIONS': config('PIGGYBACK_REPLICATIONS', default=20, cast=int),
    'SNAPSHOTS_PER_RUN': 1000,
    'TAIL_FRACTION': 0.2,
    # Sweep steps run until the tail starts SWEEP_BURN_IN / (mu eta) iterations in
    'SWEEP_BURN_IN': 6.0,
    'SWEEP_MAX_SCALE': 16,
    'MAX_WORKERS': config('PIGGYBACK_MAX_WORKERS', default=os.cpu_count() or 1, cast=int),
    'OUTPUT_DIR': config('PIGGYBACK_OUTPUT_DIR', default=str(BASE_DIR / 'results')),
    'RECORD_RUNS': config('PIGGYBACK_RECORD_RUNS', default=True, cast=bool),
    # Oracle
    'NEWTON_TOL': 1e-12,
    'NEWTON_MAX_ITER': 200,
    'FALLBACK_MAX_ITER': 100_000,
    # Finite-difference validation
    'FD_ITERS': 1000,
    'FD_STEP': 1e-5,
    # Iterates of the OLS families are affine in theta: differences are exact for any h
    'FD_STEP_AFFINE': 1.0,
    # Lemma suite
    'LEMMA_SLACK': 1e-9,
    'C1_HORIZON': 1_000_000,
}

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'INFO',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': config('DJANGO_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
        'apps': {
            'handlers': ['console'],
            'level': config('PIGGYBACK_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}
