import numpy as np
import pytest

from regnewton import Metric, rng_for


@pytest.fixture
def rng():
    return rng_for(20240809)


def random_spd(rng, n, floor=0.1):
    m = rng.uniform(-1.0, 1.0, size=(n, n))
    b = m.T @ m / n + floor * np.eye(n)
    return (b + b.T) / 2.0


def random_psd(rng, n):
    m = rng.uniform(-1.0, 1.0, size=(n, n))
    h = m.T @ m / n
    return (h + h.T) / 2.0


@pytest.fixture
def metric5(rng):
    return Metric(random_spd(rng, 5))
