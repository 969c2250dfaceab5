"""
analysis.py - Pipeline entry points
Each run_* function takes loaded inputs and returns (outputs, warnings), where
outputs is a JSON-ready dict with a fixed key order.
"""
from __future__ import annotations

import logging
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np

from core.contour import ContourMode, ContourResult, GridAxis, contour_grid
from core.data_model import (
    NoiseModel, SystemModel, TrajectoryData, build_N, has_bounded_sigma, is_bounded,
    is_consistent, sigma_param, simulate, singleton_defect, to_data_matrices,
)
from core.exceptions import DimensionError, FragilityToolkitError, NoiseModelError
from core.files import (
    ExplicitDisturbance, ExplicitInput, GaussianDisturbance, SimulationSpec,
    UniformDisturbance,
)
from core.linalg import numeric_rank
from core.fragility import (
    FragilityReport, classify_data_fragility, lambda_data_given_k, lambda_data_opt,
    lambda_model_given_k, lambda_model_opt,
)
from core.oracles import MuBudget, mu_oracle_data, mu_oracle_model
from core.settings import PINV_RTOL, VERIFY_SAMPLES, SolverSettings
from core.stabilization import (
    InformativityResult, certify_gain, check_informativity_full, check_informativity_reduced,
    gain_to_contraction,
)
from core.verification import closed_loop_radius, extreme_fragility_witness, verify_perturbation

logger = logging.getLogger(__name__)

FragilityMode = Literal["model-k", "model-opt", "data-k", "data-opt"]
InformativityMethod = Literal["full", "reduced"]

DEFAULTS = {
    "method": "reduced",
    "witness_radii": (1e-3, 1e-2),
    "mu_directions": None,        # 64 * m * n
}


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def generate_trajectory(sys: SystemModel, spec: SimulationSpec, noise: Optional[NoiseModel] = None,
                        seed: int = 0) -> Tuple[TrajectoryData, List[str]]:
    """Simulate from a spec; inputs are drawn before disturbances from one seeded generator.

    Raises NoiseModelError when the realized disturbance violates the declared bound.
    """
    warnings: List[str] = []
    rng = np.random.default_rng(seed)
    T, n, m = spec.T, sys.n, sys.m
    if len(spec.x0) != n:
        raise DimensionError(f"x0 has {len(spec.x0)} entries, system has n={n}")

    # ── Inputs ──────────────────────────────────────────────────────────────
    if isinstance(spec.input, ExplicitInput):
        u = np.array(spec.input.u, dtype=float)
        if u.shape != (T, m):
            raise DimensionError(f"explicit input must be {T} x {m}, got {u.shape}")
    else:
        u = rng.normal(0.0, spec.input.std, size=(T, m))

    # ── Disturbances ────────────────────────────────────────────────────────
    dist = spec.disturbance
    if isinstance(dist, ExplicitDisturbance):
        w = np.array(dist.w, dtype=float)
        if w.shape != (T, n):
            raise DimensionError(f"explicit disturbance must be {T} x {n}, got {w.shape}")
    elif isinstance(dist, UniformDisturbance):
        w = rng.uniform(-dist.bound, dist.bound, size=(T, n))
    elif isinstance(dist, GaussianDisturbance):
        w = rng.normal(0.0, dist.std, size=(T, n))
    else:
        w = np.zeros((T, n))

    if noise is not None:
        if noise.n != n or noise.T != T:
            raise DimensionError("noise model does not match the simulation size")
        if not noise.admits(w.T):
            raise NoiseModelError("realized disturbance violates the declared noise bound")
    elif np.any(w):
        warnings.append("no noise model declared; the disturbance bound was not checked")

    data = simulate(sys, spec.x0, u, w)
    logger.info(f"simulated T={T} samples (n={n}, m={m}, seed={seed})")
    return data, warnings


# ---------------------------------------------------------------------------
# Informativity
# ---------------------------------------------------------------------------

def _informativity(N, method: InformativityMethod, settings: Optional[SolverSettings]) -> InformativityResult:
    if method == "full":
        return check_informativity_full(N, settings)
    return check_informativity_reduced(N, settings)


def run_check(data: TrajectoryData, noise: NoiseModel, method: InformativityMethod = "reduced",
              settings: Optional[SolverSettings] = None,
              tol: float = PINV_RTOL) -> Tuple[Dict[str, Any], List[str], Optional[InformativityResult]]:
    """Boundedness, singleton test, fragility class and informativity of a dataset."""
    warnings: List[str] = []
    dm = to_data_matrices(data)
    N = build_N(dm, noise)
    bounded = is_bounded(dm, tol)

    outputs: Dict[str, Any] = {
        "n": dm.n,
        "m": dm.m,
        "T": dm.T,
        "rank": numeric_rank(dm.regressor, tol),
        "bounded": bounded,
        "singleton_defect": None,
        "classification": "ExtremelyFragile",
        "informative": False,
        "method": method,
        "margin": None,
        "certificate": None,
    }
    if not bounded or not has_bounded_sigma(N):
        warnings.append("rank [X-; U-] < n + m: Sigma_D is unbounded and every gain is extremely fragile")
        return outputs, warnings, None

    outputs["singleton_defect"] = singleton_defect(N)
    outputs["classification"] = classify_data_fragility(dm, N)
    result = _informativity(N, method, settings)
    outputs["informative"] = result.informative
    outputs["margin"] = result.margin
    if result.certificate is not None:
        outputs["certificate"] = result.certificate.to_dict()
    warnings.extend(result.warnings)
    return outputs, warnings, result


def run_design(data: TrajectoryData, noise: NoiseModel, method: InformativityMethod = "reduced",
               K: Optional[np.ndarray] = None, settings: Optional[SolverSettings] = None,
               ) -> Tuple[Dict[str, Any], List[str], bool]:
    """Stabilizing gain with its (P, alpha) certificate; with K given, decide membership of K instead.

    The output carries "K" at top level, so it can be passed back as a gain file.
    """
    warnings: List[str] = []
    N = build_N(to_data_matrices(data), noise)
    outputs: Dict[str, Any] = {"method": method if K is None else "membership", "informative": False}
    if not has_bounded_sigma(N):
        warnings.append("rank [X-; U-] < n + m: no gain stabilizes every consistent system")
        return outputs, warnings, False

    if K is None:
        result = _informativity(N, method, settings)
        warnings.extend(result.warnings)
        cert = result.certificate
        outputs["margin"] = result.margin
    else:
        cert = certify_gain(N, K, settings)
        if cert is None:
            warnings.append("the gain is not certified by any quadratic Lyapunov function for Sigma_D")

    if cert is None:
        return outputs, warnings, False

    outputs["informative"] = True
    outputs["K"] = cert.K.tolist()
    outputs["P"] = cert.P.tolist()
    outputs["alpha"] = cert.alpha
    outputs["margin"] = cert.margin
    outputs["source"] = cert.source
    try:
        S, residual = gain_to_contraction(N, cert.P, cert.alpha, cert.K)
        outputs["contraction_norm"] = float(np.linalg.norm(S, 2))
        outputs["contraction_residual"] = residual
    except FragilityToolkitError as exc:
        warnings.append(f"gain could not be mapped to a contraction: {exc}")
    return outputs, warnings, True


# ---------------------------------------------------------------------------
# Fragility
# ---------------------------------------------------------------------------

def run_fragility(mode: FragilityMode, system: Optional[SystemModel] = None,
                  data: Optional[TrajectoryData] = None, noise: Optional[NoiseModel] = None,
                  K: Optional[np.ndarray] = None, settings: Optional[SolverSettings] = None,
                  seed: int = 0, samples: int = VERIFY_SAMPLES,
                  with_mu: bool = False) -> Tuple[Dict[str, Any], List[str], FragilityReport]:
    """Fragility radius in one of four modes.

    Args:
        mode: model-k / model-opt need a system; data-k / data-opt need data and noise
        K: gain for the *-k modes
        with_mu: attach a sampled mu bracket (model modes, or data-k with bounded data)
    """
    warnings: List[str] = []
    if mode in ("model-k", "data-k") and K is None:
        raise ValueError(f"mode {mode} needs a gain")
    extras: Dict[str, Any] = {}
    budget = MuBudget(directions=DEFAULTS["mu_directions"], seed=seed)

    if mode.startswith("model"):
        if system is None:
            raise ValueError(f"mode {mode} needs a system")
        if mode == "model-k":
            report = lambda_model_given_k(system, K, settings, samples=samples, seed=seed)
        else:
            report = lambda_model_opt(system, settings, samples=samples, seed=seed)
        if with_mu and report.K is not None and report.certified:
            extras["mu"] = mu_oracle_model(system, report.K, budget).to_dict()
    else:
        if data is None or noise is None:
            raise ValueError(f"mode {mode} needs a dataset and a noise model")
        dm = to_data_matrices(data)
        N = build_N(dm, noise)
        extras["classification"] = classify_data_fragility(dm, N)
        if mode == "data-k":
            report = lambda_data_given_k(N, K, settings, samples=samples, seed=seed)
            if extras["classification"] == "ExtremelyFragile":
                extras["witnesses"] = _witnesses(dm, N, K, seed)
            elif with_mu and report.certified:
                extras["mu"] = mu_oracle_data(N, K, budget).to_dict()
        else:
            report = lambda_data_opt(N, settings, samples=samples, seed=seed)

    outputs = report.to_dict()
    outputs.update(extras)
    warnings.extend(report.warnings)
    return outputs, warnings, report


def _witnesses(dm, N, K, seed: int) -> List[Dict[str, Any]]:
    out = []
    for rho in DEFAULTS["witness_radii"]:
        witness = extreme_fragility_witness(dm, N, K, rho, seed=seed)
        if witness is None:
            out.append({"rho": rho, "found": False})
            continue
        out.append({
            "rho": rho,
            "found": True,
            "A": witness.system.A.tolist(),
            "B": witness.system.B.tolist(),
            "Delta": witness.delta.tolist(),
            "spectral_radius": witness.spectral_radius,
            "consistent": is_consistent(N, witness.system),
        })
    return out


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def run_verify(K: np.ndarray, lam: float, system: Optional[SystemModel] = None,
               data: Optional[TrajectoryData] = None, noise: Optional[NoiseModel] = None,
               samples: int = VERIFY_SAMPLES, seed: int = 0,
               delta: Optional[np.ndarray] = None) -> Tuple[Dict[str, Any], List[str]]:
    """Sample perturbations (and consistent systems for data) inside 0.99 lam."""
    warnings: List[str] = []
    if system is not None:
        target = system
    elif data is not None and noise is not None:
        N = build_N(to_data_matrices(data), noise)
        if not has_bounded_sigma(N):
            raise ValueError("data are rank deficient; Sigma_D cannot be sampled")
        target = sigma_param(N)
    else:
        raise ValueError("verification needs a system or a dataset with a noise model")

    report = verify_perturbation(target, K, lam, samples=samples, seed=seed)
    outputs: Dict[str, Any] = {"target": "model" if system is not None else "data",
                               "lambda": lam, "K": np.asarray(K).tolist()}
    outputs.update(report.to_dict())
    if delta is not None and system is not None:
        radius = closed_loop_radius(system, K, delta)
        outputs["replay"] = {"Delta": np.asarray(delta).tolist(), "norm": float(np.linalg.norm(delta, 2)),
                             "spectral_radius": radius, "stable": radius < 1.0}
    if not report.passed:
        warnings.append(f"{report.failures} of {report.samples} samples were not Schur")
    return outputs, warnings


# ---------------------------------------------------------------------------
# Contours
# ---------------------------------------------------------------------------

def run_contour(mode: ContourMode, axes: Tuple[GridAxis, GridAxis], system: Optional[SystemModel] = None,
                data: Optional[TrajectoryData] = None, noise: Optional[NoiseModel] = None,
                workers: int = 1, settings: Optional[SolverSettings] = None) -> Tuple[ContourResult, List[str]]:
    warnings: List[str] = []
    if mode == "model":
        if system is None:
            raise ValueError("model contours need a system")
        target = system
    else:
        if data is None or noise is None:
            raise ValueError("data contours need a dataset and a noise model")
        target = build_N(to_data_matrices(data), noise)
    result = contour_grid(mode, target, axes, workers=workers, settings=settings)
    if result.certified_cells == 0:
        warnings.append("no grid cell admits a certificate")
    return result, warnings
