"""
core/oracles.py - Sampling estimates of the stability radius mu
mu(K) is the largest rho such that every ||Delta|| < rho keeps A + B(K + Delta)
Schur. The oracle brackets it from random directions: each direction gives the
first radius along its ray at which the closed loop loses stability, the smallest
such radius is a witnessed upper bound.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from core.data_model import (
    InformativityMatrix, SystemModel, draw_contraction, sample_sigma, sigma_param,
)
from core.exceptions import FragilityToolkitError
from core.linalg import as_matrix, is_schur, spectral_norm, spectral_radius
from core.parallel import ordered_map

logger = logging.getLogger(__name__)


@dataclass
class MuBudget:
    directions: Optional[int] = None   # random unit directions; None -> 64*m*n
    rel_width: float = 1e-3            # bracket width relative to the initial bound
    ray_points: int = 32               # coarse scan before bisection along a ray
    refine: bool = True                # Nelder-Mead polish of the best direction
    seed: int = 0
    workers: int = 1
    systems: int = 32                  # data oracle: sampled members of Sigma_D


@dataclass(eq=False)
class MuEstimate:
    rho_lo: float                        # no sampled direction destabilizes below this radius
    rho_hi: float                        # a witnessed destabilizing radius
    witness: Optional[np.ndarray]        # Delta with ||Delta|| = rho_hi
    bound: float                         # initial bracket (trace bound)
    directions: int
    seed: int
    witness_system: Optional[SystemModel] = None

    def to_dict(self) -> Dict[str, Any]:
        def real(x):
            return x if math.isfinite(x) else None
        out = {
            "rho_lo": real(self.rho_lo),
            "rho_hi": real(self.rho_hi),
            "bound": real(self.bound),
            "directions": self.directions,
            "seed": self.seed,
            "witness": None if self.witness is None else self.witness.tolist(),
        }
        if self.witness_system is not None:
            out["witness_system"] = {"A": self.witness_system.A.tolist(),
                                     "B": self.witness_system.B.tolist()}
        return out


def trace_bound(sys: SystemModel, K: np.ndarray) -> float:
    """(n - tr(A + B K)) ||B|| / tr(B B^T): the structured direction B^T destabilizes at this radius."""
    A_K = sys.closed_loop(K)
    energy = float(np.sum(sys.B ** 2))
    if energy == 0.0:
        return math.inf
    return (sys.n - float(np.trace(A_K))) * spectral_norm(sys.B) / energy


def _unstable(A_K: np.ndarray, B: np.ndarray, Delta: np.ndarray) -> bool:
    return spectral_radius(A_K + B @ Delta) >= 1.0


def critical_radius(A_K: np.ndarray, B: np.ndarray, D: np.ndarray, ceiling: float, width: float,
                    ray_points: int = 32) -> Tuple[float, float]:
    """Bracket (lo, hi) of the first radius along rho*D (||D|| = 1) where A_K + B rho D is not Schur.

    Returns (ceiling, inf) when the ray stays stable up to the ceiling.
    """
    prev = 0.0
    for r in np.linspace(0.0, ceiling, ray_points + 1)[1:]:
        if _unstable(A_K, B, r * D):
            lo, hi = prev, float(r)
            break
        prev = float(r)
    else:
        return ceiling, math.inf
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if _unstable(A_K, B, mid * D):
            hi = mid
        else:
            lo = mid
    return lo, hi


def _unit_directions(rng: np.random.Generator, m: int, n: int, count: int) -> List[np.ndarray]:
    return [draw_contraction(rng, m, n, 1.0, on_boundary=True) for _ in range(count)]


def mu_oracle_model(sys: SystemModel, K: np.ndarray, budget: Optional[MuBudget] = None) -> MuEstimate:
    """Bisection bracket of mu(K) over random and structured directions.

    The initial bracket is [0, trace_bound]; per direction the first crossing is
    bisected to rel_width * bound. The reduction over directions is a min, so the
    result does not depend on evaluation order.
    """
    budget = budget or MuBudget()
    K = as_matrix(K, "K")
    A_K = sys.closed_loop(K)
    if not is_schur(A_K):
        raise FragilityToolkitError("A + B K is not Schur; mu(K) is undefined")
    n, m = sys.n, sys.m
    count = budget.directions if budget.directions is not None else 64 * m * n
    bound = trace_bound(sys, K)
    if not math.isfinite(bound):
        return MuEstimate(math.inf, math.inf, None, math.inf, 0, budget.seed)

    width = budget.rel_width * bound
    ceiling = bound * (1.0 + 1e-9)
    rng = np.random.default_rng(budget.seed)
    structured = sys.B.T / spectral_norm(sys.B)
    directions = _unit_directions(rng, m, n, count) + [structured, -structured]

    ray = partial(critical_radius, A_K, sys.B, ceiling=ceiling, width=width, ray_points=budget.ray_points)
    brackets = ordered_map(ray, directions, workers=budget.workers)

    his = np.array([hi for _, hi in brackets])
    best = int(np.argmin(his))
    rho_hi = float(his[best])
    rho_lo = min(lo for lo, _ in brackets)
    witness_dir = directions[best]
    if not math.isfinite(rho_hi):
        # rounding at the trace bound itself; the structured direction is the witness
        rho_hi, witness_dir = bound, structured
        rho_lo = min(rho_lo, bound - width)

    if budget.refine:
        fine = width / 64.0

        def objective(v: np.ndarray) -> float:
            D = v.reshape(m, n)
            norm = spectral_norm(D)
            if norm == 0.0:
                return rho_hi
            _, hi = critical_radius(A_K, sys.B, D / norm, rho_hi, fine, budget.ray_points)
            return hi if math.isfinite(hi) else rho_hi

        res = minimize(objective, witness_dir.ravel(), method="Nelder-Mead",
                       options={"maxiter": 200 * m * n, "xatol": 1e-6, "fatol": fine})
        D = res.x.reshape(m, n)
        if spectral_norm(D) > 0:
            D = D / spectral_norm(D)
            lo, hi = critical_radius(A_K, sys.B, D, rho_hi, fine, budget.ray_points)
            if math.isfinite(hi) and hi < rho_hi:
                rho_hi, witness_dir = hi, D
                rho_lo = min(rho_lo, lo)

    rho_hi = min(rho_hi, bound)
    rho_lo = min(rho_lo, rho_hi)
    logger.info(f"mu_oracle_model: mu in [{rho_lo:.6g}, {rho_hi:.6g}] (bound {bound:.6g}, {len(directions)} directions)")
    return MuEstimate(rho_lo, rho_hi, rho_hi * witness_dir, bound, len(directions), budget.seed)


def mu_oracle_data(N: InformativityMatrix, K: np.ndarray, budget: Optional[MuBudget] = None) -> MuEstimate:
    """Upper estimate of the data-driven radius: the model oracle over sampled members of Sigma_D."""
    budget = budget or MuBudget()
    K = as_matrix(K, "K")
    p = sigma_param(N)
    rng = np.random.default_rng(budget.seed)
    systems = [p.center_system] + [
        sample_sigma(p, draw_contraction(rng, N.n, N.n + N.m, 1.0, on_boundary=(i % 2 == 0)))
        for i in range(budget.systems)
    ]
    inner = MuBudget(directions=budget.directions, rel_width=budget.rel_width,
                     ray_points=budget.ray_points, refine=False, seed=budget.seed,
                     workers=budget.workers)

    best: Optional[MuEstimate] = None
    best_sys: Optional[SystemModel] = None
    lows: List[float] = []
    for sys in systems:
        if not is_schur(sys.closed_loop(K)):
            logger.info("mu_oracle_data: a consistent system is not stabilized by K")
            return MuEstimate(0.0, 0.0, np.zeros((N.m, N.n)), 0.0, 0, budget.seed, witness_system=sys)
        est = mu_oracle_model(sys, K, inner)
        lows.append(est.rho_lo)
        if best is None or est.rho_hi < best.rho_hi:
            best, best_sys = est, sys
    return MuEstimate(min(min(lows), best.rho_hi), best.rho_hi, best.witness, best.bound,
                      best.directions, budget.seed, witness_system=best_sys)
