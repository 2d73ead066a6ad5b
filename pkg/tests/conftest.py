import numpy as np
import pytest

from gaitrep import DEFAULT_LEG


@pytest.fixture
def leg():
    return DEFAULT_LEG


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
