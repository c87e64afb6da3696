import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "deltashell", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deltashell")


def random_hermitian(rng, N, scale):
    X = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    H = X + X.conj().T
    return scale * H / np.linalg.norm(H, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
