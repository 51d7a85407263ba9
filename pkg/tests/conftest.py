import numpy as np
import pytest

from qsdcsim import SystemParams


@pytest.fixture
def table1() -> SystemParams:
    """Default parameter set used throughout the paper-style checks."""
    return SystemParams()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
