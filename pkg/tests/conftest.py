import numpy as np
import pytest

from displab.fields import make_grid, random_wavepackets


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid1d():
    return make_grid(1, 1024, 64.0)


@pytest.fixture
def corpus1d(grid1d):
    """Twenty band-limited random fields shared by the modulation tests."""
    r = np.random.default_rng(7)
    return [random_wavepackets(grid1d, r, kmax=8.0) for _ in range(20)]
