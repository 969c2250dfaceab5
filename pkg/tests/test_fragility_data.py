import math

import numpy as np
import pytest

from core.benchmarks import EXAMPLE2_GAIN, EXAMPLE3_GAIN, EXAMPLE3_OPT_GAIN
from core.data_model import SystemModel, TrajectoryData, build_N, noise_norm_bound, to_data_matrices
from core.fragility import (
    classify_data_fragility, kappa_data_check, lambda_data_given_k, lambda_data_opt,
    lambda_model_given_k,
)


@pytest.fixture
def given(ex3_N):
    return lambda_data_given_k(ex3_N, EXAMPLE3_GAIN, samples=300, seed=0)


@pytest.fixture
def optimal(ex3_N):
    return lambda_data_opt(ex3_N, samples=300, seed=0)


def test_example3_given_gain(given):
    assert given.status == "Certified"
    assert given.kind == "DataGivenK"
    assert given.lam == pytest.approx(0.055, abs=0.003)


def test_example3_optimal_gain(optimal):
    assert optimal.status == "Certified"
    assert optimal.lam == pytest.approx(0.087, abs=0.003)
    np.testing.assert_allclose(optimal.K, EXAMPLE3_OPT_GAIN, atol=0.03)


def test_given_gain_never_beats_optimum(given, optimal):
    assert given.lam <= optimal.lam + 1e-6


def test_kappa_brackets_lambda(ex3_N, given):
    P, alpha = given.cert_P, given.cert_alpha
    assert P is not None
    assert kappa_data_check(ex3_N, P, alpha, EXAMPLE3_GAIN, 0.95 * given.lam)
    assert not kappa_data_check(ex3_N, P, alpha, EXAMPLE3_GAIN, 1.2 * given.lam)


def test_gain_outside_every_certified_set(ex3_N):
    # zero gain leaves the double eigenvalue at 1
    report = lambda_data_given_k(ex3_N, np.zeros((1, 2)), samples=50)
    assert report.status == "NoCertificate"
    assert report.lam == 0.0
    assert not report.certified


def test_classification(ex3_dm, ex3_N, truncated_data, truncated_N, noise_free):
    assert classify_data_fragility(ex3_dm, ex3_N) == "Intermediate"
    assert classify_data_fragility(to_data_matrices(truncated_data), truncated_N) == "ExtremelyFragile"
    sys = SystemModel(np.array([[0.5, 0.2], [-0.1, 0.3]]), np.zeros((2, 1)))
    dm, N = noise_free(sys)
    assert classify_data_fragility(dm, N) == "Immune"


def test_rank_deficient_data_are_extremely_fragile(truncated_N):
    report = lambda_data_given_k(truncated_N, EXAMPLE3_GAIN)
    assert report.status == "ExtremelyFragile"
    assert report.lam == 0.0
    assert lambda_data_opt(truncated_N).status == "ExtremelyFragile"


def test_noise_free_zero_input_is_immune(noise_free):
    sys = SystemModel(np.array([[0.5, 0.2], [-0.1, 0.3]]), np.zeros((2, 1)))
    _, N = noise_free(sys)
    report = lambda_data_opt(N)
    assert report.status == "Immune"
    assert math.isinf(report.lam)


def test_singleton_falls_back_to_model_radius(ex2_system, noise_free):
    _, N = noise_free(ex2_system)
    data_report = lambda_data_given_k(N, EXAMPLE2_GAIN, samples=100)
    model_report = lambda_model_given_k(ex2_system, EXAMPLE2_GAIN, samples=100)
    assert data_report.kind == "ModelGivenK"
    assert data_report.lam == pytest.approx(model_report.lam, rel=1e-4)
    assert "singleton" in data_report.warnings[0]


def test_optimal_radius_is_deterministic(ex3_N, optimal):
    again = lambda_data_opt(ex3_N, samples=300, seed=0)
    assert again.lam == optimal.lam
    np.testing.assert_array_equal(again.K, optimal.K)


def test_optimal_radius_survives_data_scaling(ex3_data):
    scaled = TrajectoryData(u=1e3 * ex3_data.u, x=1e3 * ex3_data.x, w=1e3 * ex3_data.w)
    N = build_N(to_data_matrices(scaled), noise_norm_bound(2, 4, 1e3))
    report = lambda_data_opt(N, samples=300, seed=0)
    assert report.status == "Certified"
    assert report.lam == pytest.approx(0.087, abs=2e-3)
