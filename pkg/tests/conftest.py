import pathlib

import pytest

FIXTURE_DIR = pathlib.Path(__file__).resolve().parents[1] / "src" / "saddlekit" / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURE_DIR
