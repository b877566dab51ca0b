"""Fixtures compartidas por las pruebas."""

import numpy as np
import pytest

from crt_core import SisParams, validate_params
from demo_images import DemoImageGenerator


@pytest.fixture(scope="session")
def params():
    return validate_params()


@pytest.fixture(scope="session")
def toy_params():
    """q0=7, primos {11, 13, 17}, t=2: fuera de los rangos de w, solo para operaciones escalares."""
    return SisParams(w=3, t=2, n=3, q0=7, pool=(11, 13, 17), u=143, r_bound=143 // 14)


@pytest.fixture
def natural_image():
    return DemoImageGenerator(64, 64, seed=1).natural()


@pytest.fixture
def random_image():
    return DemoImageGenerator(64, 64, seed=2).random()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
