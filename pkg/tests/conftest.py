import numpy as np
import pytest
from hypothesis import settings

from subfusion import Figure1Config, gen_figure1

# Numeric tests routinely outrun hypothesis's default deadline (first calls
# pay JIT compilation); wall-clock limits belong to the acceptance suite.
settings.register_profile("subfusion", deadline=None, max_examples=50)
settings.load_profile("subfusion")


@pytest.fixture(scope="session")
def figure1_small():
    """Small four-class scene shared by read-only tests."""
    ds, modes = gen_figure1(Figure1Config(n_per_class=60, seed=11))
    return ds, modes


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
