import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from smalimb.config import DEFAULT_SIM, default_limb

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(scope="session")
def limb():
    return default_limb()


@pytest.fixture(scope="session")
def sim():
    return DEFAULT_SIM


@pytest.fixture(scope="session")
def campaign(limb, sim):
    """Noise-free synthetic calibration campaign on the default limb."""
    from smalimb.calibration import synthetic_campaign

    return synthetic_campaign(limb, sim, seed=11)


@pytest.fixture(scope="session")
def noisy_campaign(limb, sim):
    from smalimb.calibration import synthetic_campaign

    return synthetic_campaign(limb, sim, seed=12, noise_phi=math.radians(0.2), noise_V=0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
