"""
core/contour.py - Fragility contour over a gain grid
Evaluates lambda(K) (model) or lambda_D(K) (data) on a rectangular grid of
two-entry gains; cells without a certificate hold -1. Rows come out in
row-major order (k1 outer, k2 inner) whatever the worker count.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd

from core.data_model import InformativityMatrix, SystemModel, has_bounded_sigma, recover_true
from core.exceptions import DimensionError, FragilityToolkitError
from core.fragility import lambda_data_given_k, lambda_model_given_k
from core.linalg import is_schur
from core.parallel import ordered_map
from core.settings import SolverSettings

logger = logging.getLogger(__name__)

ContourMode = Literal["model", "data"]
NO_CERTIFICATE = -1.0


@dataclass(frozen=True)
class GridAxis:
    start: float
    stop: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


def parse_grid(spec: str) -> Tuple[GridAxis, GridAxis]:
    """Parse "a:b:s,c:d:s" into two axes."""
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 2:
        raise ValueError(f"grid must have two axes 'a:b:s,c:d:s', got '{spec}'")
    axes = []
    for part in parts:
        fields = part.split(":")
        if len(fields) != 3:
            raise ValueError(f"axis must be 'start:stop:steps', got '{part}'")
        start, stop, steps = float(fields[0]), float(fields[1]), int(fields[2])
        if steps < 2:
            raise ValueError(f"axis needs at least 2 steps, got {steps}")
        axes.append(GridAxis(start, stop, steps))
    return axes[0], axes[1]


@dataclass(eq=False)
class ContourResult:
    mode: ContourMode
    k1: np.ndarray
    k2: np.ndarray
    lam: np.ndarray        # len(k1) x len(k2); -1 where no certificate exists
    gain_shape: Tuple[int, int]

    def to_frame(self) -> pd.DataFrame:
        K1, K2 = np.meshgrid(self.k1, self.k2, indexing="ij")
        return pd.DataFrame({"k1": K1.ravel(), "k2": K2.ravel(), "lambda": self.lam.ravel()})

    def best(self) -> Tuple[float, float, float]:
        i, j = np.unravel_index(int(np.argmax(self.lam)), self.lam.shape)
        return float(self.k1[i]), float(self.k2[j]), float(self.lam[i, j])

    @property
    def certified_cells(self) -> int:
        return int(np.sum(self.lam >= 0))


def _gain_shape(n: int, m: int) -> Tuple[int, int]:
    if n * m != 2:
        raise DimensionError(f"contours need a two-entry gain (m x n = 1 x 2 or 2 x 1), got {m} x {n}")
    return (m, n)


def _evaluate_cell(task) -> float:
    """Radius for one grid cell; module-level so process pools can pickle it."""
    mode, target, shape, k, settings = task
    K = np.asarray(k, dtype=float).reshape(shape)
    try:
        if mode == "model":
            if not is_schur(target.closed_loop(K)):
                return NO_CERTIFICATE
            report = lambda_model_given_k(target, K, settings, verify=False)
        else:
            if not is_schur(recover_true(target).closed_loop(K)):
                return NO_CERTIFICATE
            report = lambda_data_given_k(target, K, settings, verify=False)
    except FragilityToolkitError as exc:
        logger.debug(f"contour cell {k}: {exc}")
        return NO_CERTIFICATE
    if report.status in ("Unverified", "Certified", "Immune"):
        return report.lam
    return NO_CERTIFICATE


def contour_grid(mode: ContourMode, target: Union[SystemModel, InformativityMatrix],
                 axes: Tuple[GridAxis, GridAxis], workers: int = 1,
                 settings: Optional[SolverSettings] = None) -> ContourResult:
    """Radius on every grid cell.

    Args:
        mode: "model" (target is a SystemModel) or "data" (target is an InformativityMatrix)
        axes: (k1 axis, k2 axis); K = [[k1, k2]] or [[k1], [k2]]
        workers: >1 evaluates cells in a process pool
    """
    if mode == "model":
        if not isinstance(target, SystemModel):
            raise FragilityToolkitError("model contours need a SystemModel")
    elif mode == "data":
        if not isinstance(target, InformativityMatrix):
            raise FragilityToolkitError("data contours need an InformativityMatrix")
        if not has_bounded_sigma(target):
            raise FragilityToolkitError("data are rank deficient: every radius is zero")
    else:
        raise ValueError(f"unknown contour mode '{mode}'")

    shape = _gain_shape(target.n, target.m)
    k1, k2 = axes[0].values(), axes[1].values()
    tasks = [(mode, target, shape, (a, b), settings) for a in k1 for b in k2]
    logger.info(f"contour ({mode}): {len(tasks)} cells, {workers} worker(s)")
    values: List[float] = ordered_map(_evaluate_cell, tasks, workers=workers, processes=True)
    lam = np.array([v if math.isfinite(v) else np.inf for v in values]).reshape(len(k1), len(k2))
    return ContourResult(mode=mode, k1=k1, k2=k2, lam=lam, gain_shape=shape)
