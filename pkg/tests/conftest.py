import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def unit_field(rng, shape):
    angles = rng.uniform(0.0, 2.0 * np.pi, shape)
    return np.stack([np.cos(angles), np.sin(angles)])
