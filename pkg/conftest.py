import os
import sys

import numpy as np # type: ignore
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import scenario_factories # noqa: E402
from plants import saturated_chain_plant # noqa: E402

@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

@pytest.fixture
def chain_plant():
    return saturated_chain_plant()

@pytest.fixture
def saturated_chain_scenario():
    return scenario_factories.saturated_chain
