import numpy as np
import pytest

from core.data_model import (
    NoiseModel, SystemModel, TrajectoryData, build_N, consistency_residual, disturbance_matrix,
    draw_contraction, has_bounded_sigma, is_bounded, is_consistent, is_singleton, noise_norm_bound,
    recover_true, sample_sigma, sigma_param, simulate, singleton_defect, to_data_matrices,
)
from core.exceptions import DimensionError, NoiseModelError, UnboundedSetError


def test_example3_trajectory_is_reproduced_by_simulation(ex2_system, ex3_data):
    sim = simulate(ex2_system, ex3_data.x[0], ex3_data.u, ex3_data.w)
    np.testing.assert_allclose(sim.x, ex3_data.x)


def test_data_matrix_shapes(ex3_dm):
    assert ex3_dm.U_minus.shape == (1, 4)
    assert ex3_dm.X_minus.shape == (2, 4)
    assert ex3_dm.X_plus.shape == (2, 4)
    assert ex3_dm.regressor.shape == (3, 4)


def test_disturbance_of_true_system(ex2_system, ex3_data, ex3_dm):
    np.testing.assert_allclose(disturbance_matrix(ex3_dm, ex2_system), ex3_data.w.T, atol=1e-12)


def test_true_system_is_consistent(ex2_system, ex3_N):
    assert is_consistent(ex3_N, ex2_system)
    far = SystemModel(ex2_system.A + 5.0, ex2_system.B)
    assert not is_consistent(ex3_N, far)


def test_boundedness(ex3_dm, ex3_N, truncated_data, truncated_N):
    assert is_bounded(ex3_dm)
    assert has_bounded_sigma(ex3_N)
    assert not is_bounded(to_data_matrices(truncated_data))
    assert not has_bounded_sigma(truncated_N)
    with pytest.raises(UnboundedSetError):
        sigma_param(truncated_N)


def test_noisy_data_are_not_a_singleton(ex3_N):
    assert singleton_defect(ex3_N) > 0.1
    assert not is_singleton(ex3_N)


def test_noise_free_data_recover_the_system(noise_free):
    sys = SystemModel(np.array([[0.5, 0.2], [-0.1, 0.3]]), np.array([[1.0], [0.5]]))
    _, N = noise_free(sys)
    assert is_singleton(N)
    rec = recover_true(N)
    np.testing.assert_allclose(rec.A, sys.A, atol=1e-8)
    np.testing.assert_allclose(rec.B, sys.B, atol=1e-8)


def test_sigma_samples_are_consistent(ex3_N):
    p = sigma_param(ex3_N)
    rng = np.random.default_rng(3)
    assert consistency_residual(ex3_N, p.center_system) >= 0
    for i in range(50):
        S = draw_contraction(rng, 2, 3, 1.0, on_boundary=(i % 2 == 0))
        sys = sample_sigma(p, S)
        assert is_consistent(ex3_N, sys, tol=1e-7)


def test_sample_sigma_rejects_expansion(ex3_N):
    p = sigma_param(ex3_N)
    with pytest.raises(DimensionError):
        sample_sigma(p, 2.0 * np.eye(2, 3))


def test_noise_models():
    noise = noise_norm_bound(2, 3, 0.5)
    assert noise.is_energy_bound
    noise.validate()
    assert noise.admits(np.array([[0.3, 0.0, 0.0], [0.0, 0.4, 0.0]]))
    assert not noise.admits(np.array([[0.6, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    assert NoiseModel.noise_free(2, 3).admits(np.zeros((2, 3)))
    with pytest.raises(NoiseModelError):
        noise_norm_bound(2, 3, 0.0)
    with pytest.raises(NoiseModelError):
        NoiseModel(np.eye(2), np.zeros((2, 3)), np.eye(3)).validate()


def test_build_N_with_cross_term_matches_block_formula(ex3_dm):
    rng = np.random.default_rng(0)
    phi12 = 0.1 * rng.standard_normal((2, 4))
    noise = NoiseModel(np.eye(2), phi12, -np.eye(4))
    N = build_N(ex3_dm, noise)
    C = np.block([[np.eye(2), ex3_dm.X_plus],
                  [np.zeros((2, 2)), -ex3_dm.X_minus],
                  [np.zeros((1, 2)), -ex3_dm.U_minus]])
    np.testing.assert_allclose(N.N, C @ noise.full() @ C.T, atol=1e-10)


def test_shape_errors(ex3_dm):
    with pytest.raises(DimensionError):
        build_N(ex3_dm, noise_norm_bound(2, 5, 1.0))
    with pytest.raises(DimensionError):
        TrajectoryData(u=np.zeros((3, 1)), x=np.zeros((3, 2)))
    with pytest.raises(DimensionError):
        SystemModel(np.eye(2), np.zeros((3, 1)))


@pytest.mark.parametrize("n, m", [(2, 1), (3, 2)])
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_noise_free_singleton_over_datasets(noise_free, n, m, seed):
    rng = np.random.default_rng(100 + seed)
    sys = SystemModel(0.5 * rng.standard_normal((n, n)), rng.standard_normal((n, m)))
    _, N = noise_free(sys, T=n + m + 4, seed=seed)
    assert singleton_defect(N) <= 1e-10 * np.linalg.norm(N.N, 2)
    rec = recover_true(N)
    scale = max(1.0, np.linalg.norm(sys.stacked, 2))
    np.testing.assert_allclose(rec.stacked, sys.stacked, atol=1e-8 * scale)


def test_sample_sigma_on_the_unit_sphere(ex3_N):
    p = sigma_param(ex3_N)
    rng = np.random.default_rng(11)
    for _ in range(20):
        S = draw_contraction(rng, 2, 3, 1.0, on_boundary=True)
        assert np.linalg.norm(S, 2) == pytest.approx(1.0)
        sys = sample_sigma(p, S)
        assert is_consistent(ex3_N, sys, tol=1e-7)
        # boundary members sit on the edge of the QMI
        assert consistency_residual(ex3_N, sys) <= 1e-6 * np.linalg.norm(ex3_N.N, 2)
