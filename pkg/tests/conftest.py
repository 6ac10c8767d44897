import numpy as np
import pytest

from mimo_ee import SystemParams, draw_channels, gain_matrix, mrt_beamformers


def drop(params, seed):
    """Gain matrix of one seeded single-cell drop."""
    ch = draw_channels(params, np.random.default_rng(seed))
    return gain_matrix(ch.g, mrt_beamformers(ch.g))


@pytest.fixture
def table1():
    return SystemParams()
