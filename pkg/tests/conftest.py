import numpy as np
import pytest

from core.benchmarks import example2_system, example3_data, example3_noise
from core.data_model import (
    NoiseModel, SystemModel, build_N, noise_norm_bound, simulate, to_data_matrices,
)


@pytest.fixture
def ex2_system():
    return example2_system()


@pytest.fixture
def ex3_data():
    return example3_data()


@pytest.fixture
def ex3_noise():
    return example3_noise()


@pytest.fixture
def ex3_dm(ex3_data):
    return to_data_matrices(ex3_data)


@pytest.fixture
def ex3_N(ex3_dm, ex3_noise):
    return build_N(ex3_dm, ex3_noise)


@pytest.fixture
def truncated_data(ex3_data):
    """T = 2 < n + m: rank-deficient regressor."""
    return ex3_data.truncated(2)


@pytest.fixture
def truncated_N(truncated_data):
    return build_N(to_data_matrices(truncated_data), noise_norm_bound(2, 2, 1.0))


def noise_free_N(sys: SystemModel, T: int = 8, seed: int = 0):
    """Informativity matrix of exact data from random inputs."""
    rng = np.random.default_rng(seed)
    data = simulate(sys, rng.standard_normal(sys.n), rng.standard_normal((T, sys.m)))
    dm = to_data_matrices(data)
    return dm, build_N(dm, NoiseModel.noise_free(sys.n, T))


@pytest.fixture
def noise_free():
    return noise_free_N
