import math

import numpy as np
import pytest
from scipy.linalg import solve_discrete_are

from core.benchmarks import EXAMPLE2_GAIN, EXAMPLE2_OPT_GAIN
from core.data_model import SystemModel
from core.exceptions import FragilityToolkitError, InvalidCertificateError
from core.fragility import kappa_model_check, lambda_model_given_k, lambda_model_opt
from core.oracles import MuBudget, mu_oracle_model, trace_bound


@pytest.fixture
def given(ex2_system):
    return lambda_model_given_k(ex2_system, EXAMPLE2_GAIN, samples=300, seed=0)


@pytest.fixture
def optimal(ex2_system):
    return lambda_model_opt(ex2_system, samples=300, seed=0)


def test_example2_given_gain(given):
    assert given.status == "Certified"
    assert given.lam == pytest.approx(0.333, abs=0.005)
    assert given.verification.passed


def test_example2_optimal_gain(optimal):
    assert optimal.status == "Certified"
    assert optimal.lam == pytest.approx(0.667, abs=0.005)
    np.testing.assert_allclose(optimal.K, EXAMPLE2_OPT_GAIN, atol=0.01)


def test_given_gain_never_beats_optimum(given, optimal):
    assert given.lam <= optimal.lam + 1e-6


def test_kappa_brackets_lambda(ex2_system, given):
    assert given.cert_P is not None
    assert kappa_model_check(ex2_system, given.cert_P, EXAMPLE2_GAIN, 0.95 * given.lam)
    assert not kappa_model_check(ex2_system, given.cert_P, EXAMPLE2_GAIN, 1.2 * given.lam)


def test_kappa_rejects_non_lyapunov_matrix(ex2_system):
    with pytest.raises(InvalidCertificateError):
        kappa_model_check(ex2_system, -np.eye(2), EXAMPLE2_GAIN, 0.1)


def test_scalar_system_optimum():
    sys = SystemModel(np.array([[0.5]]), np.array([[1.0]]))
    report = lambda_model_opt(sys, samples=200)
    assert report.lam == pytest.approx(1.0, abs=1e-3)
    assert report.K[0, 0] == pytest.approx(-0.5, abs=1e-3)
    # |0.5 + delta| < 1 for |delta| < 0.5 at K = 0
    given = lambda_model_given_k(sys, np.zeros((1, 1)), samples=200)
    assert 0.0 < given.lam <= 0.5 + 1e-3


def test_zero_input_is_immune():
    sys = SystemModel(np.array([[0.5, 0.1], [0.0, 0.2]]), np.zeros((2, 1)))
    report = lambda_model_given_k(sys, np.zeros((1, 2)))
    assert report.status == "Immune"
    assert math.isinf(report.lam)
    out = report.to_dict()
    assert out["lambda"] is None and out["immune"] is True


def test_non_stabilizing_gain_is_rejected(ex2_system):
    with pytest.raises(FragilityToolkitError):
        lambda_model_given_k(ex2_system, np.zeros((1, 2)))


def test_report_key_order(given):
    keys = list(given.to_dict())
    assert keys[:4] == ["kind", "status", "lambda", "immune"]
    assert keys[-1] == "warnings"


def _lqr_gain(sys: SystemModel) -> np.ndarray:
    X = solve_discrete_are(sys.A, sys.B, np.eye(sys.n), np.eye(sys.m))
    return -np.linalg.solve(np.eye(sys.m) + sys.B.T @ X @ sys.B, sys.B.T @ X @ sys.A)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(25))
def test_radius_chain_on_random_systems(seed):
    rng = np.random.default_rng(1000 + seed)
    sys = SystemModel(rng.uniform(-1.5, 1.5, (2, 2)), rng.standard_normal((2, 1)))
    K = _lqr_gain(sys)
    given = lambda_model_given_k(sys, K, samples=100, seed=seed)
    optimal = lambda_model_opt(sys, samples=100, seed=seed)
    assert given.status == "Certified"
    tol = 1e-4 * max(1.0, optimal.lam)

    # kappa <= lambda(K) <= lambda* and lambda(K) <= mu(K) <= trace bound
    assert kappa_model_check(sys, given.cert_P, K, 0.95 * given.lam)
    assert given.lam <= optimal.lam + tol
    mu = mu_oracle_model(sys, K, MuBudget(seed=seed))
    assert given.lam <= mu.rho_hi * (1.0 + 1e-3)
    assert mu.rho_lo <= mu.rho_hi
    assert mu.rho_hi <= trace_bound(sys, K) * (1.0 + 1e-6)
