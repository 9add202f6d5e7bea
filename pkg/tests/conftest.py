import numpy as np
import pytest


def rayleigh_channel(rng, nr, nt):
    """i.i.d. CN(0,1) channel entries."""
    return np.sqrt(0.5) * (rng.standard_normal((nr, nt)) + 1j * rng.standard_normal((nr, nt)))


def cnoise(rng, n, power=1.0):
    return np.sqrt(power / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
