"""
Django settings for the camo_detection project.

Everything the PFRNet harness reads at run time lives in the ``PFRNET`` dict
at the bottom of this file; library code reaches it through
``pfrnet.conf.pfrnet_settings``.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'django-insecure-pfrnet-local-development-only')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('DJANGO_DEBUG', '0') == '1'

ALLOWED_HOSTS = os.environ.get('DJANGO_ALLOWED_HOSTS', 'localhost,127.0.0.1,testserver').split(',')


# Application definition

# No accounts: DRF runs with UNAUTHENTICATED_USER = None
INSTALLED_APPS = [
    'rest_framework',
    'corsheaders',
    'pfrnet',
]

MIDDLEWARE = [
    'corsheaders.middleware.CorsMiddleware',
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'camo_detection.urls'

WSGI_APPLICATION = 'camo_detection.wsgi.application'

# No models; runs, checkpoints and reports are files under PFRNET['RUN_ROOT'].
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Uploaded images are decoded in memory; cap their size.
DATA_UPLOAD_MAX_MEMORY_SIZE = 20 * 1024 * 1024
FILE_UPLOAD_MAX_MEMORY_SIZE = 20 * 1024 * 1024

# Django REST Framework configuration
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.MultiPartParser',
        'rest_framework.parsers.FormParser',
    ],
    'UNAUTHENTICATED_USER': None,
}

# CORS settings
CORS_ALLOWED_ORIGINS = [
    origin for origin in os.environ.get('PFRNET_CORS_ORIGINS', '').split(',') if origin
]
CORS_ALLOW_METHODS = ['GET', 'OPTIONS', 'POST']

# Logging
LOG_LEVEL = os.environ.get('PFRNET_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'pfrnet': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
    },
}

# PFRNet harness configuration
PFRNET = {
    # Every run gets <RUN_ROOT>/<config-hash>-<timestamp>/
    'RUN_ROOT': Path(os.environ.get('PFRNET_RUN_ROOT', BASE_DIR / 'runs')),
    # Checkpoint used by the HTTP API
    'SERVE_CHECKPOINT': os.environ.get('PFRNET_CHECKPOINT') or None,
    # Large-image-corpus (ImageNet) channel statistics
    'IMAGE_MEAN': (0.485, 0.456, 0.406),
    'IMAGE_STD': (0.229, 0.224, 0.225),
    'TRAIN_RESOLUTION': 352,
    # GT pixels >= this 8-bit value are foreground
    'MASK_THRESHOLD': 128,
    'EVAL_WORKERS': int(os.environ.get('PFRNET_EVAL_WORKERS', '4')),
}
