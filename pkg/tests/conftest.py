import numpy as np
import pytest
from hypothesis import settings

from netoption.checks import diamond_contract

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def diamond():
    return diamond_contract()


def correlation_2x2(rho):
    return np.array([[1.0, rho], [rho, 1.0]])
