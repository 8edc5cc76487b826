import numpy as np
import pytest

from measurefit import ExponentialRate, NormalLocation, ParetoTail


@pytest.fixture
def exp_family():
    return ExponentialRate()


@pytest.fixture
def normal_family():
    return NormalLocation(sigma1=1.0)


@pytest.fixture
def pareto_family():
    return ParetoTail(x0=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
