from pathlib import Path
from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

# =============================
# Security & Debugging Settings
# =============================

SECRET_KEY = config('SECRET_KEY', default='django-insecure-cpfm-dev-key-change-in-production')
DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = [h.strip() for h in config('ALLOWED_HOSTS', default='localhost,127.0.0.1').split(',') if h.strip()]

# =====================
# Application Definition
# =====================
INSTALLED_APPS = [
    # Django Contrib Apps
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Project Apps
    'apps.cpfm',
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

ROOT_URLCONF = 'core.urls'

# ==============
# Templates
# ==============
TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

# =============================
# Database Configuration
# =============================

# Run reports live in SQLite next to the project
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('CPFM_DB_PATH', default=str(BASE_DIR / 'db.sqlite3')),
    }
}

# ====================
# Internationalization
# ====================
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

STATIC_URL = '/static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ===========================
# CPFM adaptation runs
# ===========================
CPFM_TEACHER_ADDR = config('CPFM_TEACHER_ADDR', default='127.0.0.1:7070')
CPFM_OUTPUT_DIR = Path(config('CPFM_OUTPUT_DIR', default=str(BASE_DIR / 'runs')))
CPFM_CLIENT_RETRIES = config('CPFM_CLIENT_RETRIES', default=3, cast=int)
CPFM_CLIENT_BACKOFF = config('CPFM_CLIENT_BACKOFF', default=0.2, cast=float)  # seconds, doubled per retry
CPFM_CLIENT_TIMEOUT = config('CPFM_CLIENT_TIMEOUT', default=30.0, cast=float)
CPFM_MAX_FRAME_BYTES = config('CPFM_MAX_FRAME_BYTES', default=64 * 1024 * 1024, cast=int)
CPFM_LOG_LEVEL = config('CPFM_LOG_LEVEL', default='INFO')

# ===========================
# Logging
# ===========================
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
        'apps.cpfm': {
            'handlers': ['console'],
            'level': CPFM_LOG_LEVEL,
            'propagate': False,
        },
    },
}
