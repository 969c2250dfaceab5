import numpy as np
import pytest

from core.benchmarks import (
    AIRCRAFT_DELTA, AIRCRAFT_K_DESIGN, AIRCRAFT_K_OPT, aircraft_data, aircraft_noise, aircraft_system,
    example2_system, example3_data, preset,
)
from core.data_model import build_N, disturbance_matrix, is_bounded, to_data_matrices
from core.linalg import is_schur
from core.verification import closed_loop_radius


def test_recorded_trajectory_matches_model():
    data = example3_data()
    dm = to_data_matrices(data)
    np.testing.assert_allclose(disturbance_matrix(dm, example2_system()), data.w.T)


def test_presets():
    ex = preset("example3")
    assert ex["data"].T == 4 and ex["noise"].T == 4
    with pytest.raises(ValueError):
        preset("example9")


def test_aircraft_data_is_seeded():
    a, b = aircraft_data(seed=1, T=20), aircraft_data(seed=1, T=20)
    np.testing.assert_array_equal(a.x, b.x)
    assert aircraft_noise(20).admits(a.w.T)


def test_aircraft_gains_stabilize_true_system():
    sys = aircraft_system()
    assert is_schur(sys.closed_loop(AIRCRAFT_K_DESIGN))
    assert is_schur(sys.closed_loop(AIRCRAFT_K_OPT))


@pytest.mark.slow
def test_aircraft_radii():
    from core.fragility import lambda_data_given_k, lambda_data_opt

    data = aircraft_data(seed=0)
    dm = to_data_matrices(data)
    assert is_bounded(dm)
    N = build_N(dm, aircraft_noise(data.T))
    optimal = lambda_data_opt(N, samples=1000, seed=0)
    assert optimal.status == "Certified"
    assert optimal.verification.samples == 1000
    assert optimal.verification.passed
    assert optimal.verification.radius == pytest.approx(0.99 * optimal.lam)
    assert optimal.lam > 0
    given = lambda_data_given_k(N, AIRCRAFT_K_DESIGN, samples=1000, seed=0)
    assert given.verification is None or given.verification.passed
    assert given.lam < optimal.lam


def test_published_perturbation_replay():
    sys = aircraft_system()
    assert np.linalg.norm(AIRCRAFT_DELTA, 2) == pytest.approx(0.353, abs=0.005)
    assert closed_loop_radius(sys, AIRCRAFT_K_DESIGN, AIRCRAFT_DELTA) > 1.0
    assert closed_loop_radius(sys, AIRCRAFT_K_OPT, AIRCRAFT_DELTA) < 1.0


@pytest.mark.slow
def test_aircraft_data_are_informative_by_full_lmi():
    from core.stabilization import check_informativity_full

    data = aircraft_data(seed=0)
    N = build_N(to_data_matrices(data), aircraft_noise(data.T))
    result = check_informativity_full(N)
    assert result.informative
    assert result.certificate.source == "FullLMI"
    assert is_schur(aircraft_system().closed_loop(result.certificate.K))
