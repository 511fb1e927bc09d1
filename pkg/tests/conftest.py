import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mulimit import identity_ca, left_shift_ca, spreading_state_ca, wolfram

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rule184():
    return wolfram(184)


@pytest.fixture
def spreading():
    return spreading_state_ca(identity_ca(("0", "1"), 1), "s")


@pytest.fixture
def shift():
    return left_shift_ca()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
