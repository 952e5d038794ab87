"""
Django settings for posedeck project.

Harness defaults live in ``POSEDECK`` below; every entry can be
overridden through an environment variable of the same name prefixed
with ``POSEDECK_`` (a ``.env`` file next to manage.py is loaded first).

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/5.1/ref/settings/
"""

import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv(
    'POSEDECK_SECRET_KEY',
    'django-insecure-posedeck-desk-harness-only-not-for-deployment',
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.getenv('POSEDECK_DEBUG', 'false').lower() == 'true'

ALLOWED_HOSTS = os.getenv('POSEDECK_ALLOWED_HOSTS', 'localhost,127.0.0.1').split(',')


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'rest_framework',
    'django_filters',
    # Local apps
    'skeleton',
    'players',
    'codec',
    'traces',
    'netsim',
    'experience',
    'relay',
    'fusion',
    'bench',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'posedeck.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'posedeck.wsgi.application'


# Database
# https://docs.djangoproject.com/en/5.1/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('POSEDECK_DB_PATH', BASE_DIR / 'db.sqlite3'),
    }
}


# Password validation
# https://docs.djangoproject.com/en/5.1/ref/settings/#auth-password-validators

AUTH_PASSWORD_VALIDATORS = [
    {
        'NAME': 'django.contrib.auth.password_validation.UserAttributeSimilarityValidator',
    },
    {
        'NAME': 'django.contrib.auth.password_validation.MinimumLengthValidator',
    },
    {
        'NAME': 'django.contrib.auth.password_validation.CommonPasswordValidator',
    },
    {
        'NAME': 'django.contrib.auth.password_validation.NumericPasswordValidator',
    },
]


# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

# Static files (CSS, JavaScript, Images)
STATIC_URL = '/static/'
STATIC_ROOT = os.path.join(BASE_DIR, 'staticfiles')

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': (
        'rest_framework.authentication.SessionAuthentication',
        'rest_framework.authentication.BasicAuthentication',
    ),
    'DEFAULT_PERMISSION_CLASSES': (
        'rest_framework.permissions.IsAuthenticated',
    ),
    'DEFAULT_PARSER_CLASSES': (
        'rest_framework.parsers.JSONParser',
    ),
    'DEFAULT_FILTER_BACKENDS': (
        'django_filters.rest_framework.DjangoFilterBackend',
    ),
}

LOG_LEVEL = os.getenv('POSEDECK_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
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
        'level': LOG_LEVEL,
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': os.getenv('DJANGO_LOG_LEVEL', 'WARNING'),
            'propagate': False,
        },
    },
}


def _env(name, default, cast=str):
    value = os.getenv(f'POSEDECK_{name}')
    return default if value is None else cast(value)


# Harness defaults. Rates are bytes per second, KB means 1000 bytes.
POSEDECK = {
    'LINK_LATENCY_MS': _env('LINK_LATENCY_MS', 20.0, float),
    'LINK_JITTER_MS': _env('LINK_JITTER_MS', 5.0, float),
    'LINK_CAP_KBPS': _env('LINK_CAP_KBPS', 275.0, float),
    'LINK_QUEUE_KB': _env('LINK_QUEUE_KB', 64.0, float),
    'SEED': _env('SEED', 42, int),
    'TRACE_KIND': _env('TRACE_KIND', 'dance'),
    'TRACE_RATE_HZ': _env('TRACE_RATE_HZ', 100.0, float),
    'DURATION_S': _env('DURATION_S', 10.0, float),
    'MAX_CLIENTS': _env('MAX_CLIENTS', 10, int),
    'OUTPUT_DIR': Path(_env('OUTPUT_DIR', str(BASE_DIR / 'reports'))),
    'FUSION_PROFILES': BASE_DIR / 'fusion' / 'profiles.toml',
}
