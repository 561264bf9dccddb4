import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mbpi import ProcessSpec, SlowlyVaryingSpec

settings.register_profile("mbpi", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("mbpi")


@pytest.fixture
def recurrent():
    return ProcessSpec(0.3, 0.8)


@pytest.fixture
def exact_transient():
    """Transient family whose bracket cancels exactly: ell = |gamma|, L = 1."""
    return ProcessSpec(0.6, 0.4, SlowlyVaryingSpec.constant(1.0), SlowlyVaryingSpec.constant(0.2))


@pytest.fixture
def perturbed_transient():
    return ProcessSpec(0.6, 0.4, SlowlyVaryingSpec.constant(1.0), SlowlyVaryingSpec.with_remainder(0.2, 0.4, 1.0))


def closed_form_F(nu, t, s, c=1.0):
    return 1.0 - ((1.0 - np.asarray(s)) ** (-nu) + nu * c * np.asarray(t)) ** (-1.0 / nu)
