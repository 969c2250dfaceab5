"""
core/fragility.py - Fragility radii
Model-based and data-driven fragility: kappa checks for a fixed Lyapunov
certificate, lambda(K) for a given gain and the optimal lambda over all gains,
each obtained from one SDP and post-verified by sampling.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional

import numpy as np

from core.data_model import (
    DataMatrices, InformativityMatrix, SystemModel, has_bounded_sigma, is_bounded,
    is_singleton, recover_true, sigma_param,
)
from core.exceptions import DimensionError, FragilityToolkitError, InvalidCertificateError
from core.linalg import as_matrix, is_schur, max_eig, min_eig, pinv, scale_of, spectral_norm, sym
from core.sdp import SdpProblem, SdpSolution, block_matrix, padded_constant
from core.settings import (
    CERT_BETA_RATIO, GAMMA_FLOOR, SINGLETON_RTOL, STRICT_EPS, VERIFY_SAMPLES, VERIFY_SHRINK,
    SolverSettings,
)
from core.stabilization import gain_in_set
from core.verification import VerificationReport, verify_perturbation

logger = logging.getLogger(__name__)

ReportKind     = Literal["ModelGivenK", "ModelOptimal", "DataGivenK", "DataOptimal"]
ReportStatus   = Literal["Certified", "Unverified", "NoCertificate", "NumericalFailure",
                         "ExtremelyFragile", "Immune"]
Classification = Literal["ExtremelyFragile", "Intermediate", "Immune"]


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FragilityReport:
    kind: ReportKind
    status: ReportStatus
    lam: float                                   # radius; inf when immune
    K: Optional[np.ndarray]                      # gain assessed (given or optimal)
    beta_star: Optional[float] = None
    Q_star: Optional[np.ndarray] = None
    L_star: Optional[np.ndarray] = None
    zeta_star: Optional[float] = None
    cert_P: Optional[np.ndarray] = None          # interior certificate, see kappa checks
    cert_alpha: Optional[float] = None
    solver: str = ""
    seed: int = 0
    verification: Optional[VerificationReport] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status in ("Certified", "Immune")

    def to_dict(self) -> Dict[str, Any]:
        def arr(x):
            return None if x is None else np.asarray(x).tolist()
        finite = math.isfinite(self.lam)
        return {
            "kind": self.kind,
            "status": self.status,
            "lambda": self.lam if finite else None,
            "immune": not finite,
            "beta_star": self.beta_star,
            "K": arr(self.K),
            "Q_star": arr(self.Q_star),
            "L_star": arr(self.L_star),
            "zeta_star": self.zeta_star,
            "certificate": None if self.cert_P is None else {"P": arr(self.cert_P), "alpha": self.cert_alpha},
            "solver": self.solver,
            "seed": self.seed,
            "verification": None if self.verification is None else self.verification.to_dict(),
            "warnings": list(self.warnings),
        }


def _finish(report: FragilityReport, target, verify: bool, samples: int, seed: int) -> FragilityReport:
    """Run the sampling post-check; a failed check downgrades the report."""
    if report.status != "Unverified":
        return report
    if not verify:
        return report
    report.verification = verify_perturbation(target, report.K, report.lam, samples=samples,
                                              shrink=VERIFY_SHRINK, seed=seed)
    if report.verification.passed:
        report.status = "Certified"
    else:
        report.status = "NumericalFailure"
        report.warnings.append(
            f"sampling found {report.verification.failures} unstable perturbation(s) at "
            f"{VERIFY_SHRINK:g} x lambda"
        )
    return report


def _solver_warnings(sol: SdpSolution) -> List[str]:
    return [f"solver reported an inaccurate solution ({sol.solver})"] if sol.inaccurate else []


def _check_gain(K, n: int, m: int) -> np.ndarray:
    K = as_matrix(K, "K")
    if K.shape != (m, n):
        raise DimensionError(f"K must be {m} x {n}, got {K.shape}")
    return K


# ---------------------------------------------------------------------------
# Model-based
# ---------------------------------------------------------------------------

def _model_lmi(sys: SystemModel, Q, X, beta):
    """[[Q, X^T, Q], [X, Q - B B^T, 0], [Q, 0, beta I]] with X = A Q + B L."""
    n = sys.n
    return block_matrix(
        [
            [Q, X.T,               Q],
            [X, Q - sys.B @ sys.B.T, None],
            [Q, None,              beta * np.eye(n)],
        ],
        [n, n, n],
    )


def _model_interior(sys: SystemModel, K: np.ndarray, beta_star: float,
                    settings: Optional[SolverSettings]) -> Optional[np.ndarray]:
    """Lyapunov matrix P = Q_c^{-1} from a strictly feasible point at beta = beta*/ratio."""
    prob = SdpProblem("lambda_model_interior", settings)
    Q = prob.add_sym_var("Q", sys.n)
    prob.add_psd_constraint(_model_lmi(sys, Q, sys.closed_loop(K) @ Q, beta_star / CERT_BETA_RATIO), "lmi")
    ok, sol = prob.strict_feasible(["lmi"])
    if not ok:
        return None
    return np.linalg.inv(sol.value("Q"))


def _immune_model(kind: ReportKind, K: np.ndarray, seed: int) -> FragilityReport:
    return FragilityReport(kind=kind, status="Immune", lam=math.inf, K=K, seed=seed,
                           warnings=["B = 0: the input cannot perturb the closed loop"])


def _is_zero_input(sys: SystemModel) -> bool:
    return spectral_norm(sys.B) <= SINGLETON_RTOL * max(1.0, spectral_norm(sys.A))


def lambda_model_given_k(sys: SystemModel, K: np.ndarray, settings: Optional[SolverSettings] = None,
                         verify: bool = True, samples: int = VERIFY_SAMPLES,
                         seed: int = 0) -> FragilityReport:
    """lambda(K) = sqrt(1/beta*), beta* = min beta s.t. the model LMI holds with L = K Q.

    Args:
        sys: true system (A, B)
        K: gain with A + B K Schur
        verify: run the sampling post-check at 0.99 lambda
    """
    K = _check_gain(K, sys.n, sys.m)
    if not is_schur(sys.closed_loop(K)):
        raise FragilityToolkitError("A + B K is not Schur; lambda(K) is undefined")
    if _is_zero_input(sys):
        return _immune_model("ModelGivenK", K, seed)

    prob = SdpProblem("lambda_model_given_k", settings)
    Q = prob.add_sym_var("Q", sys.n)
    beta = prob.add_scalar_var("beta")
    prob.add_psd_constraint(_model_lmi(sys, Q, sys.closed_loop(K) @ Q, beta), "lmi")
    prob.minimize(beta)
    sol = prob.solve()
    if not sol.optimal or sol.value("beta") <= 0:
        return FragilityReport(kind="ModelGivenK", status="NumericalFailure", lam=0.0, K=K,
                               solver=sol.solver, seed=seed,
                               warnings=[f"SDP status {sol.status}"])

    beta_star = sol.value("beta")
    report = FragilityReport(
        kind="ModelGivenK", status="Unverified", lam=math.sqrt(1.0 / beta_star), K=K,
        beta_star=beta_star, Q_star=sol.value("Q"), solver=sol.solver, seed=seed,
        warnings=_solver_warnings(sol),
    )
    report.cert_P = _model_interior(sys, K, beta_star, settings)
    logger.info(f"lambda_model_given_k: beta*={beta_star:.6g}, lambda={report.lam:.6g}")
    return _finish(report, sys, verify, samples, seed)


def lambda_model_opt(sys: SystemModel, settings: Optional[SolverSettings] = None,
                     verify: bool = True, samples: int = VERIFY_SAMPLES,
                     seed: int = 0) -> FragilityReport:
    """Optimal lambda = sqrt(1/beta*) over all gains; K* = L* Q*^+."""
    if _is_zero_input(sys):
        if not is_schur(sys.A):
            raise FragilityToolkitError("B = 0 and A is not Schur: no stabilizing gain exists")
        return _immune_model("ModelOptimal", np.zeros((sys.m, sys.n)), seed)

    prob = SdpProblem("lambda_model_opt", settings)
    Q = prob.add_sym_var("Q", sys.n)
    L = prob.add_rect_var("L", sys.m, sys.n)
    beta = prob.add_scalar_var("beta")
    prob.add_psd_constraint(_model_lmi(sys, Q, sys.A @ Q + sys.B @ L, beta), "lmi")
    prob.minimize(beta)
    sol = prob.solve()
    if sol.status == "Infeasible":
        return FragilityReport(kind="ModelOptimal", status="NoCertificate", lam=0.0, K=None,
                               solver=sol.solver, seed=seed,
                               warnings=["model LMI infeasible: (A, B) is not stabilizable"])
    if not sol.optimal or sol.value("beta") <= 0:
        return FragilityReport(kind="ModelOptimal", status="NumericalFailure", lam=0.0, K=None,
                               solver=sol.solver, seed=seed, warnings=[f"SDP status {sol.status}"])

    beta_star = sol.value("beta")
    Q_star, L_star = sol.value("Q"), sol.value("L")
    K_star = L_star @ pinv(Q_star)
    warnings = _solver_warnings(sol) + _pinv_warning(L_star, Q_star, K_star)
    report = FragilityReport(
        kind="ModelOptimal", status="Unverified", lam=math.sqrt(1.0 / beta_star), K=K_star,
        beta_star=beta_star, Q_star=Q_star, L_star=L_star, solver=sol.solver, seed=seed,
        warnings=warnings,
    )
    if not is_schur(sys.closed_loop(K_star)):
        report.status = "NumericalFailure"
        report.warnings.append("recovered K* does not stabilize (A, B)")
        return report
    report.cert_P = _model_interior(sys, K_star, beta_star, settings)
    logger.info(f"lambda_model_opt: beta*={beta_star:.6g}, lambda={report.lam:.6g}")
    return _finish(report, sys, verify, samples, seed)


def _pinv_warning(L: np.ndarray, Q: np.ndarray, K: np.ndarray) -> List[str]:
    if spectral_norm(K @ Q - L) > 1e-6 * max(1.0, spectral_norm(L)):
        msg = "L* Q*^+ Q* differs from L*; Q* is ill-conditioned"
        logger.warning(msg)
        return [msg]
    return []


def kappa_model_check(sys: SystemModel, P: np.ndarray, K: np.ndarray, rho: float,
                      settings: Optional[SolverSettings] = None, eps: float = STRICT_EPS) -> bool:
    """rho < kappa(P, K): exists gamma >= 0 with

        [[P, 0], [0, gamma I]] - [[A_K, B], [I, 0]]^T blkdiag(P, gamma rho^2 I) [[A_K, B], [I, 0]] > 0.

    P is the Lyapunov matrix in the form P - A_K^T P A_K > 0; the interior
    certificate of lambda_model_* reports is of this form.
    """
    K = _check_gain(K, sys.n, sys.m)
    P = sym(P)
    n, m = sys.n, sys.m
    if P.shape != (n, n):
        raise DimensionError(f"P must be {n} x {n}, got {P.shape}")
    if rho < 0:
        raise FragilityToolkitError(f"rho must be nonnegative, got {rho}")
    A_K = sys.closed_loop(K)
    s = scale_of(P)
    if min_eig(P) <= eps * s or min_eig(P - A_K.T @ P @ A_K) <= eps * s:
        raise InvalidCertificateError("P is not a Lyapunov matrix for A + B K")

    G = np.hstack([A_K, sys.B])                            # n x (n+m)
    const = -G.T @ P @ G
    const[:n, :n] += P
    slope = np.zeros((n + m, n + m))
    slope[:n, :n] = -rho ** 2 * np.eye(n)
    slope[n:, n:] = np.eye(m)

    prob = SdpProblem("kappa_model", settings)
    gamma = prob.add_scalar_var("gamma", lower_bound=0.0)
    prob.add_psd_constraint((const + gamma * slope) / s, "lmi")
    ok, sol = prob.strict_feasible(["lmi"], eps)
    logger.debug(f"kappa_model_check(rho={rho:g}): margin={sol.margin}")
    return ok


# ---------------------------------------------------------------------------
# Data-driven
# ---------------------------------------------------------------------------

def classify_data_fragility(dm: DataMatrices, N: InformativityMatrix) -> Classification:
    """ExtremelyFragile for rank-deficient data, Immune for a singleton set with B = 0."""
    if not is_bounded(dm):
        return "ExtremelyFragile"
    if is_singleton(N) and _is_zero_input(recover_true(N)):
        return "Immune"
    return "Intermediate"


def _data_lmi(n: int, m: int, Q, L, beta, zeta, Nn: np.ndarray):
    """Five-block LMI (n, n, m, n, n) minus zeta blkdiag(N, 0)."""
    lmi = block_matrix(
        [
            [Q,    None, None,             None,        None],
            [None, -Q,   -L.T,             -Q,          None],
            [None, -L,   -beta * np.eye(m), None,       L],
            [None, -Q,   None,             np.eye(n),   Q],
            [None, None, L.T,              Q,           Q],
        ],
        [n, n, m, n, n],
    )
    return lmi - zeta * padded_constant(Nn, 4 * n + m)


def _data_interior(N: InformativityMatrix, K: np.ndarray, beta_star: float,
                   settings: Optional[SolverSettings]):
    """(P, alpha) strictly feasible for the given-gain LMI at beta = ratio * beta*."""
    Nn, s = N.normalized()
    prob = SdpProblem("lambda_data_interior", settings)
    Q = prob.add_sym_var("Q", N.n)
    zeta = prob.add_scalar_var("zeta", lower_bound=0.0)
    prob.add_psd_constraint(_data_lmi(N.n, N.m, Q, K @ Q, CERT_BETA_RATIO * beta_star, zeta, Nn.N), "lmi")
    ok, sol = prob.strict_feasible(["lmi"])
    if not ok:
        return None, None
    return sol.value("Q"), sol.value("zeta") / s


def _data_precheck(N: InformativityMatrix, kind: ReportKind, K, seed: int) -> Optional[FragilityReport]:
    if not has_bounded_sigma(N):
        return FragilityReport(kind=kind, status="ExtremelyFragile", lam=0.0, K=K, seed=seed,
                               warnings=["data are rank deficient: every gain is extremely fragile"])
    return None


def _singleton_fallback(N: InformativityMatrix, K, optimal: bool, settings, verify, samples,
                        seed) -> Optional[FragilityReport]:
    if not is_singleton(N):
        return None
    sys_true = recover_true(N)
    note = "Sigma_D is a singleton; radius computed on the recovered system"
    logger.info(note)
    if _is_zero_input(sys_true):
        kind: ReportKind = "DataOptimal" if optimal else "DataGivenK"
        gain = np.zeros((N.m, N.n)) if K is None else K
        return FragilityReport(kind=kind, status="Immune", lam=math.inf, K=gain, seed=seed,
                               warnings=[note, "B = 0: every perturbation is tolerated"])
    if optimal:
        report = lambda_model_opt(sys_true, settings, verify, samples, seed)
    else:
        report = lambda_model_given_k(sys_true, K, settings, verify, samples, seed)
    report.warnings.insert(0, note)
    return report


def lambda_data_given_k(N: InformativityMatrix, K: np.ndarray, settings: Optional[SolverSettings] = None,
                        verify: bool = True, samples: int = VERIFY_SAMPLES,
                        seed: int = 0) -> FragilityReport:
    """lambda_D(K) = sqrt(beta*), beta* = max beta s.t. the data LMI holds with L = K Q.

    A nonpositive beta* means K has no quadratic certificate; the report then
    carries status NoCertificate and lambda 0.
    """
    K = _check_gain(K, N.n, N.m)
    early = _data_precheck(N, "DataGivenK", K, seed)
    if early is not None:
        return early
    fallback = _singleton_fallback(N, K, False, settings, verify, samples, seed)
    if fallback is not None:
        return fallback

    Nn, s = N.normalized()
    prob = SdpProblem("lambda_data_given_k", settings)
    Q = prob.add_sym_var("Q", N.n)
    zeta = prob.add_scalar_var("zeta", lower_bound=0.0)
    beta = prob.add_scalar_var("beta")
    prob.add_psd_constraint(_data_lmi(N.n, N.m, Q, K @ Q, beta, zeta, Nn.N), "lmi")
    prob.maximize(beta)
    sol = prob.solve()
    if not sol.optimal:
        status: ReportStatus = "NoCertificate" if sol.status == "Infeasible" else "NumericalFailure"
        return FragilityReport(kind="DataGivenK", status=status, lam=0.0, K=K, solver=sol.solver,
                               seed=seed, warnings=[f"SDP status {sol.status}"])
    beta_star = sol.value("beta")
    if beta_star <= STRICT_EPS:
        return FragilityReport(kind="DataGivenK", status="NoCertificate", lam=0.0, K=K,
                               beta_star=beta_star, solver=sol.solver, seed=seed,
                               warnings=["K is not in any certified gain set"])

    report = FragilityReport(
        kind="DataGivenK", status="Unverified", lam=math.sqrt(beta_star), K=K, beta_star=beta_star,
        Q_star=sol.value("Q"), zeta_star=sol.value("zeta") / s, solver=sol.solver, seed=seed,
        warnings=_solver_warnings(sol),
    )
    report.cert_P, report.cert_alpha = _data_interior(N, K, beta_star, settings)
    logger.info(f"lambda_data_given_k: beta*={beta_star:.6g}, lambda_D={report.lam:.6g}")
    return _finish(report, sigma_param(N), verify, samples, seed)


def lambda_data_opt(N: InformativityMatrix, settings: Optional[SolverSettings] = None,
                    verify: bool = True, samples: int = VERIFY_SAMPLES,
                    seed: int = 0) -> FragilityReport:
    """Optimal lambda_D = sqrt(beta*) over all gains; K* = L* Q*^+."""
    early = _data_precheck(N, "DataOptimal", None, seed)
    if early is not None:
        return early
    fallback = _singleton_fallback(N, None, True, settings, verify, samples, seed)
    if fallback is not None:
        return fallback

    n, m = N.n, N.m
    Nn, s = N.normalized()
    prob = SdpProblem("lambda_data_opt", settings)
    Q = prob.add_sym_var("Q", n)
    L = prob.add_rect_var("L", m, n)
    zeta = prob.add_scalar_var("zeta", lower_bound=0.0)
    beta = prob.add_scalar_var("beta")
    prob.add_psd_constraint(_data_lmi(n, m, Q, L, beta, zeta, Nn.N), "lmi")
    prob.maximize(beta)
    sol = prob.solve()
    if not sol.optimal:
        status: ReportStatus = "NoCertificate" if sol.status == "Infeasible" else "NumericalFailure"
        return FragilityReport(kind="DataOptimal", status=status, lam=0.0, K=None, solver=sol.solver,
                               seed=seed, warnings=[f"SDP status {sol.status}"])
    beta_star = sol.value("beta")
    if beta_star <= STRICT_EPS:
        return FragilityReport(kind="DataOptimal", status="NoCertificate", lam=0.0, K=None,
                               beta_star=beta_star, solver=sol.solver, seed=seed,
                               warnings=["data are not informative for quadratic stabilization"])

    Q_star, L_star = sol.value("Q"), sol.value("L")
    K_star = L_star @ pinv(Q_star)
    warnings = _solver_warnings(sol) + _pinv_warning(L_star, Q_star, K_star)
    if min_eig(Q_star) < -1e-6 or max_eig(Q_star) > 1.0 + 1e-6:
        warnings.append("Q* violates 0 <= Q <= I beyond solver accuracy")
    report = FragilityReport(
        kind="DataOptimal", status="Unverified", lam=math.sqrt(beta_star), K=K_star,
        beta_star=beta_star, Q_star=Q_star, L_star=L_star, zeta_star=sol.value("zeta") / s,
        solver=sol.solver, seed=seed, warnings=warnings,
    )
    report.cert_P, report.cert_alpha = _data_interior(N, K_star, beta_star, settings)
    logger.info(f"lambda_data_opt: beta*={beta_star:.6g}, lambda_D={report.lam:.6g}")
    return _finish(report, sigma_param(N), verify, samples, seed)


def kappa_data_check(N: InformativityMatrix, P: np.ndarray, alpha: float, K: np.ndarray, rho: float,
                     settings: Optional[SolverSettings] = None, eps: float = STRICT_EPS) -> bool:
    """rho < kappa_D(P, alpha, K): exists gamma > 0 making the five-block LMI in gamma strict.

    Requires K in K(P, alpha).
    """
    n, m = N.n, N.m
    K = _check_gain(K, n, m)
    P = sym(P)
    if rho < 0:
        raise FragilityToolkitError(f"rho must be nonnegative, got {rho}")
    if not gain_in_set(N, P, alpha, K):
        raise InvalidCertificateError("K is not in K(P, alpha)")

    sizes = [n, n, m, n, n]
    offsets = np.cumsum([0] + sizes)
    size = int(offsets[-1])

    def put(M, i, j, blk):
        M[offsets[i]:offsets[i + 1], offsets[j]:offsets[j + 1]] = blk

    KP = K @ P
    const = np.zeros((size, size))
    put(const, 0, 0, P)
    put(const, 1, 1, -P)
    put(const, 1, 2, -KP.T)
    put(const, 2, 1, -KP)
    put(const, 1, 3, -P)
    put(const, 3, 1, -P)
    put(const, 2, 4, KP)
    put(const, 4, 2, KP.T)
    put(const, 3, 4, P)
    put(const, 4, 3, P)
    put(const, 4, 4, P)
    const -= alpha * padded_constant(N.N, size)

    slope = np.zeros((size, size))
    put(slope, 2, 2, -rho ** 2 * np.eye(m))
    put(slope, 3, 3, np.eye(n))

    s = max(scale_of(P), alpha * scale_of(N.N))
    prob = SdpProblem("kappa_data", settings)
    gamma = prob.add_scalar_var("gamma", lower_bound=GAMMA_FLOOR)
    prob.add_psd_constraint((const + gamma * slope) / s, "lmi")
    ok, sol = prob.strict_feasible(["lmi"], eps)
    logger.debug(f"kappa_data_check(rho={rho:g}): margin={sol.margin}")
    return ok
