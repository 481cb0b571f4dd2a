import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qchybrid import GridSpec, gaussian_moments, moments_to_state


@pytest.fixture
def grid96():
    return GridSpec(-8.0, 8.0, 96, -8.0, 8.0, 96)


@pytest.fixture
def grid64():
    return GridSpec(-8.0, 8.0, 64, -8.0, 8.0, 64)


@pytest.fixture
def grid128():
    return GridSpec(-8.0, 8.0, 128, -8.0, 8.0, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def correlated_state(grid96):
    """Displaced correlated Gaussian with a quadratic phase."""
    m = gaussian_moments(
        mean=(0.0, 1.0),
        sigma=((1.0, 0.5), (0.5, 1.0)),
        s_grad=(0.1, -0.2),
        s_hess=((0.2, 0.1), (0.1, -0.15)),
    )
    return moments_to_state(m, grid96)


@pytest.fixture
def product_state(grid96):
    m = gaussian_moments(mean=(0.3, -0.5), sigma=((0.8, 0.0), (0.0, 0.6)))
    return moments_to_state(m, grid96)
