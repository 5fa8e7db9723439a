from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from config import create_config  # noqa: E402
from services.fan_catalog import standard_fan  # noqa: E402
from services.fundcat import build_fundamental_category, finite_level, galois_datum  # noqa: E402

DATA = ROOT / 'data'


@pytest.fixture
def config():
    # Campioni ridotti: le suite complete girano con ``exodromy selfcheck``
    return create_config(
        {
            'TESTING': True,
            'RANDOM_SAMPLES': 8,
            'YONEDA_SAMPLES': 3,
            'YONEDA_LEVELS': [2, 3],
            'MAX_STALK': 3,
        }
    )


@pytest.fixture
def rng():
    return random.Random(20240607)


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def category():
    def _category(name: str, level: int | None = None, frob: int = 1):
        base = build_fundamental_category(standard_fan(name))
        if level is None:
            return base
        return finite_level(base, galois_datum(level, frob))

    return _category


@pytest.fixture
def a1(category):
    return category('A1')


@pytest.fixture
def a2(category):
    return category('A2')


@pytest.fixture
def p1(category):
    return category('P1')


@pytest.fixture
def p2(category):
    return category('P2')
