import numpy as np
import pytest
from hypothesis import assume, given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.exceptions import DimensionError, NotPsdError, NotSymmetricError
from core.linalg import (
    SymPartition, gen_schur_complement, in_pi_class, is_schur, min_eig, null_basis,
    numeric_rank, pinv, psd_inv_sqrt, psd_sqrt, qmi_member, qmi_value, require_symmetric,
    spectral_norm, spectral_radius,
)

ENTRIES = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


@seed(1)
@settings(max_examples=60, deadline=None)
@given(M=arrays(np.float64, (4, 3), elements=ENTRIES))
def test_pinv_penrose_identities(M):
    Mp = pinv(M)
    scale = max(1.0, spectral_norm(M))
    cond = max(1.0, scale * spectral_norm(Mp))
    assert np.allclose(M @ Mp @ M, M, atol=1e-10 * scale * cond)
    assert np.allclose(M @ Mp, (M @ Mp).T, atol=1e-10 * cond)
    assert np.allclose(Mp @ M, (Mp @ M).T, atol=1e-10 * cond)


@seed(2)
@settings(max_examples=60, deadline=None)
@given(G=arrays(np.float64, (3, 3), elements=ENTRIES))
def test_psd_sqrt_squares_back(G):
    M = G @ G.T
    R = psd_sqrt(M)
    assert np.allclose(R, R.T)
    assert min_eig(R) >= -1e-8 * max(1.0, spectral_norm(R))
    assert np.allclose(R @ R, M, atol=1e-7 * max(1.0, spectral_norm(M)))


def test_psd_sqrt_rejects_negative_eigenvalue():
    with pytest.raises(NotPsdError):
        psd_sqrt(np.diag([1.0, -0.5]))


def test_psd_inv_sqrt_of_diagonal():
    np.testing.assert_allclose(psd_inv_sqrt(np.diag([4.0, 0.25])), np.diag([0.5, 2.0]))
    with pytest.raises(NotPsdError):
        psd_inv_sqrt(np.diag([1.0, 0.0]))


def test_gen_schur_complement_with_singular_block():
    Pi = np.array([[2.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    S = gen_schur_complement(Pi, SymPartition(1, 2))
    np.testing.assert_allclose(S, [[1.0]])


def test_pi_class_norm_bound():
    # ||W|| <= 1 for 2 x 3 disturbances
    Pi = np.block([[np.eye(2), np.zeros((2, 3))], [np.zeros((3, 2)), -np.eye(3)]])
    part = SymPartition(2, 3)
    assert in_pi_class(Pi, part)
    # positive Pi22 is never in the class
    bad = Pi.copy()
    bad[4, 4] = 1.0
    assert not in_pi_class(bad, part)


def test_pi_class_kernel_inclusion():
    Pi = np.array([[1.0, 1.0], [1.0, 0.0]])
    assert not in_pi_class(Pi, SymPartition(1, 1))


def test_qmi_member_on_norm_ball():
    Pi = np.block([[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), -np.eye(2)]])
    part = SymPartition(2, 2)
    assert qmi_member(Pi, part, 0.5 * np.eye(2), strict=True)
    assert qmi_member(Pi, part, np.eye(2), strict=False)
    assert not qmi_member(Pi, part, np.eye(2), strict=True)
    assert not qmi_member(Pi, part, 1.1 * np.eye(2))


def test_qmi_value_shape_checked():
    Pi = np.eye(3)
    with pytest.raises(DimensionError):
        qmi_value(Pi, SymPartition(1, 2), np.zeros((1, 2)))


def test_rank_and_null_basis():
    M = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
    assert numeric_rank(M) == 1
    V = null_basis(M)
    assert V.shape == (3, 2)
    np.testing.assert_allclose(M @ V, 0.0, atol=1e-12)


def test_schur_and_spectral_radius():
    A = np.array([[0.5, 1.0], [0.0, 0.9]])
    assert spectral_radius(A) == pytest.approx(0.9)
    assert is_schur(A)
    assert not is_schur(A, tol=0.2)
    assert not is_schur(np.eye(2))


def test_require_symmetric():
    with pytest.raises(NotSymmetricError):
        require_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(DimensionError):
        require_symmetric(np.zeros((2, 3)))


def test_partition_needs_both_blocks():
    for q, r in ((0, 2), (2, 0), (1, -1)):
        with pytest.raises(DimensionError):
            SymPartition(q, r)


@seed(3)
@settings(max_examples=60, deadline=None)
@given(M=arrays(np.float64, (5, 5), elements=ENTRIES))
def test_gen_schur_complement_matches_inverse(M):
    part = SymPartition(2, 3)
    Pi = 0.5 * (M + M.T)
    G = M[2:, 2:]
    Pi[2:, 2:] = -(G @ G.T + np.eye(3))
    P11, P12, P22 = Pi[:2, :2], Pi[:2, 2:], Pi[2:, 2:]
    direct = P11 - P12 @ np.linalg.inv(P22) @ P12.T
    scale = max(1.0, spectral_norm(Pi)) ** 2
    np.testing.assert_allclose(gen_schur_complement(Pi, part), direct, atol=1e-9 * scale)


@seed(4)
@settings(max_examples=100, deadline=None)
@given(A=arrays(np.float64, (3, 3), elements=st.floats(-1.0, 1.0, allow_nan=False)))
def test_is_schur_matches_characteristic_roots(A):
    roots = np.roots(np.poly(A))
    radius = float(np.max(np.abs(roots))) if roots.size else 0.0
    assume(abs(radius - 1.0) > 1e-3)
    assert is_schur(A) == (radius < 1.0)
