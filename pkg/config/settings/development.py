"""
Django development settings for the piggyback project.
"""
from decouple import config

from .base import *

DEBUG = True

# Run ledger database
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('PIGGYBACK_DB_PATH', default=str(BASE_DIR / 'experiments.sqlite3')),
    }
}

LOGGING['handlers']['console']['formatter'] = 'verbose'
