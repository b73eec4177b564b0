import random
from pathlib import Path

import pytest

from opbkit.opbfile import load

DATA = Path(__file__).parent / "data"


def fixture_path(name: str) -> Path:
    return DATA / name


def load_fixture(name: str):
    return load(DATA / name)


@pytest.fixture
def rng():
    return random.Random(20240817)


def read_golden(name: str) -> str:
    return (DATA / name).read_text()
