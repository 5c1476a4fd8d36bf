import numpy as np
import pytest

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def pytest_configure(config):
    # keep tiny-matrix linear algebra single-threaded and reproducible
    import os

    os.environ.setdefault("OMP_NUM_THREADS", "1")
