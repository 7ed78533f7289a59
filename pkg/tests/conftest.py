import os

import pytest
from hypothesis import HealthCheck, settings

from pfl.utils import set_limits

settings.register_profile("ci", derandomize=True, max_examples=100, deadline=None)
settings.register_profile(
    "dev", max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture(autouse=True)
def reset_limits():
    set_limits(None)
    yield
    set_limits(None)
