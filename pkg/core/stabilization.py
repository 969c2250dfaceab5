"""
core/stabilization.py - Informativity for quadratic stabilization
Full and reduced informativity LMIs, the certificate matrices Gamma/Theta/M,
membership of a gain in the ellipsoid K(P, alpha) and its parameterization
K = -M12 M22^{-1} + (M|M22)^{1/2} S (-M22)^{-1/2}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np

from core.data_model import InformativityMatrix, has_bounded_sigma
from core.exceptions import (
    DimensionError, FragilityToolkitError, InvalidCertificateError, NotPsdError,
)
from core.linalg import (
    SymPartition, as_matrix, max_eig, min_eig, pinv, psd_inv_sqrt, psd_sqrt,
    qmi_member, spectral_norm, sym,
)
from core.sdp import SdpProblem, SdpSolution, block_matrix, padded_constant
from core.settings import QMI_TOL, STRICT_EPS, SolverSettings

logger = logging.getLogger(__name__)

CertificateSource = Literal["FullLMI", "ReducedLMI", "UserSupplied"]
InformativityMethod = Literal["full", "reduced"]


# ---------------------------------------------------------------------------
# Data classes
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class GainCertificate:
    P: np.ndarray          # n x n, P > 0, largest eigenvalue normalized to 1
    alpha: float           # >= 0, refers to the unscaled N
    K: np.ndarray          # m x n
    margin: float          # t* of the strict-feasibility protocol
    source: CertificateSource

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "alpha": float(self.alpha),
            "margin": float(self.margin),
            "P": self.P.tolist(),
            "K": self.K.tolist(),
        }


@dataclass
class InformativityResult:
    informative: bool
    method: InformativityMethod
    certificate: Optional[GainCertificate] = None
    margin: Optional[float] = None
    status: str = "Optimal"
    warnings: List[str] = field(default_factory=list)


@dataclass(eq=False)
class CertificateMatrices:
    gamma: np.ndarray   # (2n+m) square
    theta: np.ndarray   # 2n square
    M: np.ndarray       # (m+n) square, blocks (m, n)
    n: int
    m: int

    @property
    def M11(self) -> np.ndarray:
        return self.M[:self.m, :self.m]

    @property
    def M12(self) -> np.ndarray:
        return self.M[:self.m, self.m:]

    @property
    def M22(self) -> np.ndarray:
        return self.M[self.m:, self.m:]

    @property
    def center(self) -> np.ndarray:
        """-M12 M22^{-1}, the center of the gain ellipsoid."""
        return -np.linalg.solve(self.M22, self.M12.T).T

    @property
    def schur(self) -> np.ndarray:
        """M|M22 = M11 - M12 M22^{-1} M21."""
        return sym(self.M11 - self.M12 @ np.linalg.solve(self.M22, self.M12.T))


# ---------------------------------------------------------------------------
# Certificate matrices
# ---------------------------------------------------------------------------

def cert_matrices(N: InformativityMatrix, P: np.ndarray, alpha: float) -> CertificateMatrices:
    """Gamma = blkdiag(P,0,0) - alpha N, Theta and the gain-set matrix M."""
    n, m = N.n, N.m
    P = sym(P)
    if P.shape != (n, n):
        raise DimensionError(f"P must be {n} x {n}, got {P.shape}")
    if alpha < 0:
        raise InvalidCertificateError(f"alpha must be nonnegative, got {alpha}")
    aN = alpha * N.N

    gamma = -aN.copy()
    gamma[:n, :n] += P

    theta = -aN[:2 * n, :2 * n].copy()
    theta[:n, :n] += P
    theta[n:, n:] -= P

    left = np.zeros((m + n, 2 * n))
    left[:m, :n] = aN[2 * n:, :n]
    left[:m, n:] = aN[2 * n:, n:2 * n]
    left[m:, n:] = P

    base = np.zeros((m + n, m + n))
    base[:m, :m] = -aN[2 * n:, 2 * n:]
    base[m:, m:] = -P
    M = sym(base - left @ pinv(theta) @ left.T)
    return CertificateMatrices(gamma=sym(gamma), theta=sym(theta), M=M, n=n, m=m)


def _certificate_scale(N: InformativityMatrix, P: np.ndarray, alpha: float) -> float:
    return max(spectral_norm(P), alpha * spectral_norm(N.N), np.finfo(float).tiny)


def _require_valid(cm: CertificateMatrices, scale: float, tol: float) -> None:
    if min_eig(cm.gamma) <= tol * scale:
        raise InvalidCertificateError("Gamma is not positive definite")
    if min_eig(cm.theta) <= tol * scale:
        raise InvalidCertificateError("Theta is not positive definite")


def gain_in_set(N: InformativityMatrix, P: np.ndarray, alpha: float, K: np.ndarray,
                tol: float = QMI_TOL) -> bool:
    """K in K(P, alpha): [I; K^T]^T M [I; K^T] > 0. Rejects (P, alpha) with Gamma or Theta not > 0."""
    cm = cert_matrices(N, P, alpha)
    _require_valid(cm, _certificate_scale(N, P, alpha), tol)
    K = as_matrix(K, "K")
    if K.shape != (N.m, N.n):
        raise DimensionError(f"K must be {N.m} x {N.n}, got {K.shape}")
    return qmi_member(cm.M, SymPartition(N.m, N.n), K.T, strict=True, tol=tol)


def parameterize_gains(N: InformativityMatrix, P: np.ndarray, alpha: float,
                       S: np.ndarray) -> np.ndarray:
    """Gain for a strict contraction S (m x n, ||S|| < 1)."""
    cm = cert_matrices(N, P, alpha)
    _require_valid(cm, _certificate_scale(N, P, alpha), QMI_TOL)
    S = as_matrix(S, "S")
    if S.shape != (N.m, N.n):
        raise DimensionError(f"S must be {N.m} x {N.n}, got {S.shape}")
    if spectral_norm(S) >= 1.0:
        raise FragilityToolkitError(f"S must be a strict contraction, ||S|| = {spectral_norm(S):.6f}")
    return cm.center + psd_sqrt(cm.schur) @ S @ psd_inv_sqrt(-cm.M22)


def gain_to_contraction(N: InformativityMatrix, P: np.ndarray, alpha: float,
                        K: np.ndarray) -> Tuple[np.ndarray, float]:
    """Inverse map S = (M|M22)^{-1/2} (K + M12 M22^{-1}) (-M22)^{1/2}, plus the round-trip residual."""
    cm = cert_matrices(N, P, alpha)
    _require_valid(cm, _certificate_scale(N, P, alpha), QMI_TOL)
    K = as_matrix(K, "K")
    try:
        S = psd_inv_sqrt(cm.schur) @ (K - cm.center) @ psd_sqrt(-cm.M22)
    except NotPsdError as exc:
        raise InvalidCertificateError(f"M|M22 is not positive definite: {exc}") from exc
    residual = spectral_norm(cm.center + psd_sqrt(cm.schur) @ S @ psd_inv_sqrt(-cm.M22) - K)
    return S, residual


# ---------------------------------------------------------------------------
# Informativity LMIs
# ---------------------------------------------------------------------------

def _normalize(P: np.ndarray, alpha: float, L: Optional[np.ndarray] = None):
    """Rescale (P, alpha, L) so that the largest eigenvalue of P is 1."""
    c = max_eig(sym(P))
    if c <= 0:
        return P, alpha, L
    return sym(P) / c, alpha / c, (None if L is None else L / c)


def _full_lmi(n: int, m: int, P, L, alpha, Nn: np.ndarray):
    """[[P,0,0,0],[0,-P,-L^T,0],[0,-L,0,L],[0,0,L^T,P]] - alpha blkdiag(N, 0)."""
    lmi = block_matrix(
        [
            [P,    None, None,  None],
            [None, -P,   -L.T,  None],
            [None, -L,   None,  L],
            [None, None, L.T,   P],
        ],
        [n, n, m, n],
    )
    return lmi - alpha * padded_constant(Nn, 3 * n + m)


def check_informativity_full(N: InformativityMatrix, settings: Optional[SolverSettings] = None,
                             eps: float = STRICT_EPS) -> InformativityResult:
    """Strict LMI in (P, L, alpha); K = L P^{-1} on success.

    Args:
        N: informativity matrix of bounded data
        settings: solver settings (default: environment-aware defaults)
        eps: strict-feasibility threshold on the margin t*
    """
    n, m = N.n, N.m
    if not has_bounded_sigma(N):
        return InformativityResult(False, "full", status="RankDeficient",
                                   warnings=["data regressor [X-; U-] is rank deficient"])
    Nn, s = N.normalized()

    prob = SdpProblem("informativity_full", settings)
    P = prob.add_sym_var("P", n)
    L = prob.add_rect_var("L", m, n)
    alpha = prob.add_scalar_var("alpha", lower_bound=0.0)
    prob.add_psd_constraint(_full_lmi(n, m, P, L, alpha, Nn.N), "lmi")
    prob.add_psd_constraint(P, "P")
    prob.add_psd_constraint(np.eye(n) - P, "normalization")
    ok, sol = prob.strict_feasible(["lmi", "P"], eps)
    return _result_from(N, sol, ok, s, "full")


def check_informativity_reduced(N: InformativityMatrix, settings: Optional[SolverSettings] = None,
                                eps: float = STRICT_EPS) -> InformativityResult:
    """Strict LMIs Gamma > 0, Theta > 0 in (P, alpha); K = -M12 M22^{-1} on success."""
    n, m = N.n, N.m
    if not has_bounded_sigma(N):
        return InformativityResult(False, "reduced", status="RankDeficient",
                                   warnings=["data regressor [X-; U-] is rank deficient"])
    Nn, s = N.normalized()

    prob = SdpProblem("informativity_reduced", settings)
    P = prob.add_sym_var("P", n)
    alpha = prob.add_scalar_var("alpha", lower_bound=0.0)
    gamma = block_matrix([[P, None, None], [None, None, None], [None, None, None]], [n, n, m]) \
        - alpha * Nn.N
    theta = block_matrix([[P, None], [None, -P]], [n, n]) - alpha * Nn.N[:2 * n, :2 * n]
    prob.add_psd_constraint(gamma, "gamma")
    prob.add_psd_constraint(theta, "theta")
    prob.add_psd_constraint(P, "P")
    prob.add_psd_constraint(np.eye(n) - P, "normalization")
    ok, sol = prob.strict_feasible(["gamma", "theta", "P"], eps)
    return _result_from(N, sol, ok, s, "reduced")


def _result_from(N: InformativityMatrix, sol: SdpSolution, ok: bool, scale: float,
                 method: InformativityMethod) -> InformativityResult:
    warnings: List[str] = []
    if sol.inaccurate:
        warnings.append(f"solver reported an inaccurate solution ({sol.solver})")
    if not ok:
        logger.info(f"informativity ({method}): not informative, margin={sol.margin}, status={sol.status}")
        return InformativityResult(False, method, margin=sol.margin, status=sol.status, warnings=warnings)

    P = sol.value("P")
    alpha = sol.value("alpha") / scale
    if method == "full":
        P, alpha, L = _normalize(P, alpha, sol.value("L"))
        K = L @ np.linalg.inv(P)
        source: CertificateSource = "FullLMI"
    else:
        P, alpha, _ = _normalize(P, alpha)
        K = cert_matrices(N, P, alpha).center
        source = "ReducedLMI"

    cert = GainCertificate(P=P, alpha=float(alpha), K=K, margin=float(sol.margin), source=source)
    try:
        if not gain_in_set(N, P, alpha, K):
            warnings.append("designed gain fails the a-posteriori membership test")
    except InvalidCertificateError as exc:
        warnings.append(f"certificate fails a-posteriori check: {exc}")
    for w in warnings:
        logger.warning(f"informativity ({method}): {w}")
    logger.info(f"informativity ({method}): informative, margin={sol.margin:.3e}")
    return InformativityResult(True, method, certificate=cert, margin=sol.margin,
                               status=sol.status, warnings=warnings)


def certify_gain(N: InformativityMatrix, K: np.ndarray, settings: Optional[SolverSettings] = None,
                 eps: float = STRICT_EPS) -> Optional[GainCertificate]:
    """Decide K in the union of all K(P, alpha): the full LMI with L = K P is linear in (P, alpha)."""
    n, m = N.n, N.m
    K = as_matrix(K, "K")
    if K.shape != (m, n):
        raise DimensionError(f"K must be {m} x {n}, got {K.shape}")
    if not has_bounded_sigma(N):
        return None
    Nn, s = N.normalized()

    prob = SdpProblem("certify_gain", settings)
    P = prob.add_sym_var("P", n)
    alpha = prob.add_scalar_var("alpha", lower_bound=0.0)
    prob.add_psd_constraint(_full_lmi(n, m, P, K @ P, alpha, Nn.N), "lmi")
    prob.add_psd_constraint(P, "P")
    prob.add_psd_constraint(np.eye(n) - P, "normalization")
    ok, sol = prob.strict_feasible(["lmi", "P"], eps)
    if not ok:
        return None
    P_val, alpha_val, _ = _normalize(sol.value("P"), sol.value("alpha") / s)
    return GainCertificate(P=P_val, alpha=float(alpha_val), K=K.copy(),
                           margin=float(sol.margin), source="UserSupplied")
