# tests/conftest.py
import os
import random
import sys
from fractions import Fraction

import pytest

# get the project root (the folder that has app.py and services/)
PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from app import create_app  # noqa: E402
from services.homog_service import RootConstants  # noqa: E402


@pytest.fixture
def app():
    return create_app({'TESTING': True})


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def rng():
    return random.Random(20240101)


def random_constants(rng: random.Random) -> RootConstants:
    """Random valid constants: small nonnegative p, q, b (b in halves) and positive rational gamma."""
    rank = rng.randint(1, 5)
    return RootConstants(
        rank=rank,
        p=tuple(rng.randint(0, 8) for _ in range(rank)),
        q=tuple(rng.randint(0, 8) for _ in range(rank)),
        b=tuple(Fraction(rng.randint(0, 8), 2) for _ in range(rank)),
        gamma=tuple(Fraction(rng.randint(1, 40), rng.randint(1, 7)) for _ in range(rank)),
    )
