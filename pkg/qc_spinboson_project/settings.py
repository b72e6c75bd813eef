"""
Django settings for qc_spinboson_project project.

The project has no web surface: Django provides the settings layer, the
management-command CLI and the ORM ledger of sweep runs.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/6.0/ref/settings/
"""

from pathlib import Path
import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Initialize environment variables
env = environ.Env(
    DEBUG=(bool, False),
    SIMULATION_MAX_DIMENSION=(int, 4096),
    SIMULATION_HERMITICITY_RTOL=(float, 1e-8),
    SIMULATION_THREADS=(int, 1),
    LOG_LEVEL=(str, 'INFO'),
)
environ.Env.read_env(BASE_DIR / '.env')

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env('SECRET_KEY', default='django-insecure-qc-spinboson-development-key')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = env.list('ALLOWED_HOSTS', default=[])

# Numerical limits
SIMULATION_MAX_DIMENSION = env('SIMULATION_MAX_DIMENSION')
SIMULATION_HERMITICITY_RTOL = env('SIMULATION_HERMITICITY_RTOL')
SIMULATION_THREADS = env('SIMULATION_THREADS')
SIMULATION_RESULTS_DIR = Path(env('SIMULATION_RESULTS_DIR', default=str(BASE_DIR / 'results')))


# Application definition

INSTALLED_APPS = [
    'spinboson',
]


# Database
# https://docs.djangoproject.com/en/6.0/ref/settings/#databases

DATABASES = {
    'default': env.db('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}"),
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging
# https://docs.djangoproject.com/en/6.0/topics/logging/

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{levelname} {asctime} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': env('LOG_LEVEL'),
    },
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True
