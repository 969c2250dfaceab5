import numpy as np
import pytest

from core.exceptions import DimensionError, NotSymmetricError
from core.sdp import SdpProblem, block_matrix, padded_constant
from core.settings import SolverSettings


def test_minimize_scalar_lmi():
    prob = SdpProblem("toy")
    t = prob.add_scalar_var("t")
    prob.add_psd_constraint(block_matrix([[t, 1.0], [1.0, 1.0]], [1, 1]), "lmi")
    prob.minimize(t)
    sol = prob.solve()
    assert sol.optimal
    assert sol.value("t") == pytest.approx(1.0, abs=1e-6)
    assert sol.slack["lmi"] >= -1e-7


def test_infeasible_problem_is_reported():
    prob = SdpProblem("infeasible")
    X = prob.add_sym_var("X", 2)
    prob.add_psd_constraint(X, "X")
    prob.add_psd_constraint(-X - np.eye(2), "negX")
    sol = prob.solve()
    assert sol.status == "Infeasible"
    with pytest.raises(KeyError):
        sol.value("X")


def test_strict_feasibility_margin():
    prob = SdpProblem("strict")
    X = prob.add_sym_var("X", 2)
    prob.add_psd_constraint(X, "X")
    prob.add_psd_constraint(np.eye(2) - X, "upper")
    ok, sol = prob.strict_feasible(["X", "upper"])
    assert ok
    assert sol.margin == pytest.approx(0.5, abs=1e-5)


def test_non_strict_only_problem_is_not_strictly_feasible():
    prob = SdpProblem("flat")
    X = prob.add_sym_var("X", 2)
    prob.add_psd_constraint(X, "X")
    prob.add_psd_constraint(-X, "negX")
    ok, sol = prob.strict_feasible(["X"])
    assert not ok
    assert sol.margin is None or sol.margin <= 1e-6


def test_scs_fallback_solver_settings():
    prob = SdpProblem("scs", SolverSettings(solver="SCS", fallback=False))
    t = prob.add_scalar_var("t")
    prob.add_psd_constraint(block_matrix([[t, 1.0], [1.0, 1.0]], [1, 1]), "lmi")
    prob.minimize(t)
    sol = prob.solve()
    assert sol.solver == "SCS"
    assert sol.value("t") == pytest.approx(1.0, abs=1e-3)


def test_asymmetric_constraint_rejected():
    prob = SdpProblem("asym")
    L = prob.add_rect_var("L", 2, 2)
    with pytest.raises(NotSymmetricError):
        prob.add_psd_constraint(L, "bad")


def test_block_shapes_checked():
    prob = SdpProblem("shapes")
    Q = prob.add_sym_var("Q", 2)
    with pytest.raises(DimensionError):
        block_matrix([[Q, None], [None, Q]], [2, 3])
    with pytest.raises(ValueError):
        prob.add_sym_var("Q", 2)


def test_padded_constant():
    out = padded_constant(np.ones((2, 2)), 3)
    np.testing.assert_allclose(out, [[1, 1, 0], [1, 1, 0], [0, 0, 0]])


def test_dump_lists_problem():
    prob = SdpProblem("listing")
    prob.add_sym_var("Q", 2)
    prob.add_scalar_var("beta", lower_bound=0.0)
    text = prob.dump()
    assert "Q" in text and "beta >= 0" in text
