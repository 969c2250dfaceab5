"""
core/verification.py - Sampling-based verification
Independent checks of reported stability radii: random perturbations (and, for
data-driven radii, random consistent systems) must keep the closed loop Schur.
Also builds destabilizing witnesses for rank-deficient data.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from core.data_model import (
    DataMatrices, InformativityMatrix, SigmaParam, SystemModel, draw_contraction,
    is_bounded, is_consistent, sample_sigma,
)
from core.exceptions import DimensionError
from core.linalg import as_matrix, null_basis, pinv, spectral_norm, spectral_radius
from core.settings import VERIFY_SAMPLES, VERIFY_SHRINK

logger = logging.getLogger(__name__)

Target = Union[SystemModel, SigmaParam]

WITNESS_SHIFTS = (1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)


@dataclass
class VerificationReport:
    passed: bool
    samples: int
    radius: float                   # ||Delta|| bound actually sampled
    max_spectral_radius: float      # worst closed-loop spectral radius seen
    failures: int = 0
    counterexample: Optional[Dict[str, Any]] = None
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "samples": self.samples,
            "radius": self.radius,
            "max_spectral_radius": self.max_spectral_radius,
            "failures": self.failures,
            "counterexample": self.counterexample,
            "seed": self.seed,
        }


@dataclass
class FragilityWitness:
    system: SystemModel     # consistent with the data
    delta: np.ndarray       # m x n, ||delta|| = rho
    shift: float            # step taken along the data-invisible direction
    spectral_radius: float


def closed_loop_radius(sys: SystemModel, K: np.ndarray, Delta: Optional[np.ndarray] = None) -> float:
    """Spectral radius of A + B (K + Delta)."""
    K = as_matrix(K, "K")
    gain = K if Delta is None else K + as_matrix(Delta, "Delta")
    return spectral_radius(sys.closed_loop(gain))


def _random_delta(rng: np.random.Generator, m: int, n: int, radius: float, on_boundary: bool) -> np.ndarray:
    if radius == 0.0:
        return np.zeros((m, n))
    if on_boundary:
        return draw_contraction(rng, m, n, radius, on_boundary=True)
    # uniform in the norm: a unit direction times a random fraction of the radius
    return draw_contraction(rng, m, n, radius * rng.uniform(), on_boundary=True)


def verify_perturbation(target: Target, K: np.ndarray, lam: float, samples: int = VERIFY_SAMPLES,
                        shrink: float = VERIFY_SHRINK, seed: int = 0) -> VerificationReport:
    """Sample ||Delta|| <= shrink * lam (and systems of Sigma_D for a SigmaParam target).

    Half the draws lie on the boundary of each ball; the rest are spread inside.
    """
    K = as_matrix(K, "K")
    n = target.n
    m = target.m
    if K.shape != (m, n):
        raise DimensionError(f"K must be {m} x {n}, got {K.shape}")
    if not np.isfinite(lam):
        return VerificationReport(True, 0, float("inf"), 0.0, seed=seed)

    rng = np.random.default_rng(seed)
    radius = shrink * max(lam, 0.0)
    worst, failures, counterexample = 0.0, 0, None
    for i in range(samples):
        boundary = i % 2 == 0
        if isinstance(target, SigmaParam):
            S = draw_contraction(rng, n, n + m, 1.0, on_boundary=boundary)
            sys = sample_sigma(target, S)
        else:
            sys = target
        Delta = _random_delta(rng, m, n, radius, on_boundary=boundary)
        rho = closed_loop_radius(sys, K, Delta)
        worst = max(worst, rho)
        if rho >= 1.0:
            failures += 1
            if counterexample is None:
                counterexample = {"A": sys.A.tolist(), "B": sys.B.tolist(),
                                  "Delta": Delta.tolist(), "spectral_radius": rho}
    passed = failures == 0
    if not passed:
        logger.warning(f"verification failed: {failures}/{samples} samples unstable at radius {radius:.6g}")
    return VerificationReport(passed, samples, radius, worst, failures, counterexample, seed)


def verify_gain_on_sigma(p: SigmaParam, gains: Sequence[np.ndarray], samples: int = 200,
                         seed: int = 0) -> List[bool]:
    """For each gain: does A + B K stay Schur on sampled members of Sigma_D (Delta = 0)?"""
    out = []
    for K in gains:
        report = verify_perturbation(p, K, 0.0, samples=samples, seed=seed)
        out.append(report.passed)
    return out


# ---------------------------------------------------------------------------
# Rank-deficient data
# ---------------------------------------------------------------------------

def extreme_fragility_witness(dm: DataMatrices, N: InformativityMatrix, K: np.ndarray, rho: float,
                              seed: int = 0, extra_directions: int = 8) -> Optional[FragilityWitness]:
    """Consistent (A, B) and ||Delta|| = rho with A + B (K + Delta) not Schur.

    Starts from the least-squares system and moves along [A0 B0] with
    A0 X- + B0 U- = 0, which leaves the data residual unchanged; the
    perturbation Delta = (rho/||B0||) B0^T then destabilizes for a large shift.
    Returns None when the data have full rank.
    """
    if is_bounded(dm):
        return None
    K = as_matrix(K, "K")
    n, m = dm.n, dm.m
    D = dm.regressor
    base_AB = dm.X_plus @ pinv(D)
    base = SystemModel(base_AB[:, :n], base_AB[:, n:])
    if not is_consistent(N, base):
        logger.warning("least-squares system is not consistent with the noise model")
        return None

    V = null_basis(D.T)                                 # (n+m) x k, v^T D = 0
    rng = np.random.default_rng(seed)
    directions: List[np.ndarray] = []
    for k in range(V.shape[1]):
        for j in range(n):
            e = np.zeros((n, 1))
            e[j, 0] = 1.0
            directions.append(e @ V[:, k:k + 1].T)
    for _ in range(extra_directions):
        coeffs = rng.standard_normal((V.shape[1], n))
        directions.append((V @ coeffs).T)

    for AB0 in directions:
        A0, B0 = AB0[:, :n], AB0[:, n:]
        normB0 = spectral_norm(B0)
        if normB0 <= 1e-12:
            continue
        Delta = (rho / normB0) * B0.T
        for shift in WITNESS_SHIFTS:
            sys = SystemModel(base.A + shift * A0, base.B + shift * B0)
            radius = closed_loop_radius(sys, K, Delta)
            if radius >= 1.0:
                logger.info(f"extreme fragility witness: shift={shift:g}, spectral radius={radius:.4f}")
                return FragilityWitness(sys, Delta, shift, radius)
    return None
