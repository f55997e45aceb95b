import numpy as np
import pytest

from fbm_averaging import benchmark_spec

X0 = np.array([1.0, 0.5, -0.5, 0.25])


@pytest.fixture
def bench():
    return benchmark_spec(0.1)
