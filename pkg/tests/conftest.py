import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dvrchan.config import load_config


@pytest.fixture(scope="session")
def gtu():
    """The generalized-typical-urban preset configuration."""
    return load_config()


@pytest.fixture(scope="session")
def gtu_scenario(gtu):
    return gtu.scenario()
