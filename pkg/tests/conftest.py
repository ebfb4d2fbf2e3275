import numpy as np
import pytest

from qevar.haar import HaarSampler
from qevar.orbit import center_spectrum

SEED = 20240917


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def make_sampler():
    def factory(d, stream_index=0, seed=SEED):
        return HaarSampler(seed=seed, d=d, stream_index=stream_index)

    return factory


@pytest.fixture
def random_spectrum(rng):
    def factory(d, scale=1.0):
        return center_spectrum(rng.uniform(-scale, scale, d))

    return factory
