import numpy as np
import pytest

from sqzbath import SystemParams


@pytest.fixture
def paper_system():
    """Reference parameter set used throughout the numerical experiments."""
    return SystemParams(mass=1.0, spring_k=1.25, coupling_amp=2.5, drive_freq=0.45)


@pytest.fixture
def rng():
    return np.random.default_rng(20140)
