import os
import pathlib
import sys

import django
import pytest

PROJECT_DIR = pathlib.Path(__file__).resolve().parent.parent / "workload_service"
sys.path.insert(0, str(PROJECT_DIR))
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "workload_service.settings")
django.setup()

from queueing.model_files import load_model  # noqa: E402
from queueing.spectral import build_expansion, solve_model  # noqa: E402


@pytest.fixture(scope="session")
def model_dir():
    return PROJECT_DIR / "queueing" / "queues"


def _solved(model_dir, name, terms, telescope, count=None):
    model = load_model(model_dir / f"{name}.model")
    helper, ladder = solve_model(model, count=max(count or 0, terms + telescope))
    expansion = build_expansion(model, helper, ladder, terms=terms, telescope=telescope)
    return model, helper, ladder, expansion


@pytest.fixture(scope="session")
def md1(model_dir):
    """M/D/1 with lambda = 1/3: the helper is exact."""
    return _solved(model_dir, "md1", 1000, 200)


@pytest.fixture(scope="session")
def ud1(model_dir):
    """U/D/1 over 2000 terms; the ladder is long enough for a 5000-zero plain product."""
    return _solved(model_dir, "ud1", 2000, 200, count=5010)


@pytest.fixture(scope="session")
def uu1(model_dir):
    return _solved(model_dir, "uu1", 5000, 200)


@pytest.fixture(scope="session")
def e2d1(model_dir):
    return _solved(model_dir, "e2d1", 1000, 200)
