import numpy as np
import pytest

from smilab.engine import EnsembleSpec
from smilab.linalg import SIGMA_Z, spectral_decompose


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def plus_rho():
    return np.full((2, 2), 0.5, dtype=complex)


def dephasing(lam, obs=SIGMA_Z, base=None):
    base = np.zeros_like(obs) if base is None else base
    return EnsembleSpec("dephasing", lam, base, measurement_basis=spectral_decompose(obs))
