"""
Django settings for the Workload Service project.

The project carries no web surface: the ``queueing`` app exposes its analyses through the
``gg1`` management command. Numerical defaults live here so that every run can be tuned
from the environment.
"""
import os
import environ

env = environ.Env()

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SECRET_KEY = env("DJANGO_SECRET_KEY", default="workload-service-local-only")

DEBUG = env.bool("DJANGO_DEBUG", False)

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "queueing",
]

# The app has no models; Django still wants a database.
DATABASES = {"default": env.db("DATABASE_URL", default="sqlite://:memory:")}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

TIME_ZONE = "UTC"

USE_TZ = True

# REST Framework, used for model-file validation and JSON rendering

REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": ("rest_framework.renderers.JSONRenderer",),
    "COERCE_DECIMAL_TO_STRING": False,
}

# Newton residual bound, normalised by the magnitude of the summands
GG1_NEWTON_EPS = env.float("GG1_NEWTON_EPS", 1e-11)

GG1_NEWTON_MAX_ITER = env.int("GG1_NEWTON_MAX_ITER", 50)

# Number of spectral terms for tails and of extra roots used by telescoped coefficients
GG1_TAIL_TERMS = env.int("GG1_TAIL_TERMS", 1000)
GG1_TELESCOPE_TERMS = env.int("GG1_TELESCOPE_TERMS", 200)

# Roots summed exactly before the helper takes over the cumulant tail
GG1_CUMULANT_SPLIT = env.int("GG1_CUMULANT_SPLIT", 1000)

# Gated M/M/1: residue terms and product factors
GG1_GATED_TERMS = env.int("GG1_GATED_TERMS", 60)
GG1_GATED_FACTORS = env.int("GG1_GATED_FACTORS", 2000)

# Finite-queue Markov chain oracle
GG1_MARKOV_QMAX = env.int("GG1_MARKOV_QMAX", 200)
GG1_MARKOV_TOL = env.float("GG1_MARKOV_TOL", 1e-10)
GG1_MARKOV_MAX_ITER = env.int("GG1_MARKOV_MAX_ITER", 10000)

GG1_SIMULATION_SEED = env.int("GG1_SIMULATION_SEED", 20240601)
GG1_SIMULATION_SHARDS = env.int("GG1_SIMULATION_SHARDS", 4)

GG1_MODEL_DIR = env("GG1_MODEL_DIR", default=os.path.join(BASE_DIR, "queueing", "queues"))

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "simple"},
    },
    "loggers": {
        "queueing": {
            "handlers": ["console"],
            "level": env("GG1_LOG_LEVEL", default="INFO"),
            "propagate": False,
        },
    },
}
