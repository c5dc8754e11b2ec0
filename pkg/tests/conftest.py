import numpy as np
import pytest

from waterfuse.belief import Frame


@pytest.fixture(scope="session")
def water_frame():
    return Frame(("water", "non-water"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
