import numpy as np
import pytest

from vpshell import Ensemble


@pytest.fixture
def rng():
    return np.random.default_rng(20250808)


def random_ensemble(rng, n_max=50, time=0.0):
    """Small random ensemble with log-spread radii."""
    n = int(rng.integers(1, n_max + 1))
    return Ensemble(
        time,
        10.0 ** rng.uniform(-1.0, 1.0, n),
        rng.normal(0.0, 1.0, n),
        np.abs(rng.normal(0.0, 1.0, n)),
        rng.uniform(0.1, 1.0, n),
    )
