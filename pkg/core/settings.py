"""
core/settings.py - Numerical tolerances and solver settings
Defaults used across the engines; the CLI builds overrides from its flags.
"""
from __future__ import annotations

import os
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

SolverName = Literal["CLARABEL", "SCS"]

# Module-level defaults, importable as plain floats by the engines
PINV_RTOL       = 1e-10   # pseudoinverse / rank cutoff, relative to the largest singular value
PSD_CLAMP_TOL   = 1e-9    # eigenvalues above -tol*scale are clamped to zero in square roots
QMI_TOL         = 1e-9    # relative eigenvalue tolerance for QMI membership
STRICT_EPS      = 1e-7    # margin t* must exceed this to accept a strict LMI
SINGLETON_RTOL  = 1e-8    # singleton defect threshold relative to ||N||
GAMMA_FLOOR     = 1e-9    # lower bound standing in for gamma > 0
FEAS_TOL        = 1e-8    # solver feasibility tolerance
SLACK_RTOL      = 1e-6    # post-solve constraint check, relative to ||expr||
VERIFY_SAMPLES  = 1000
VERIFY_SHRINK   = 0.99
CERT_BETA_RATIO = 0.98    # interior certificates are re-solved at this fraction of beta*


class Tolerances(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    pinv_rtol: float      = Field(PINV_RTOL, gt=0)
    psd_clamp_tol: float  = Field(PSD_CLAMP_TOL, gt=0)
    qmi_tol: float        = Field(QMI_TOL, ge=0)
    strict_eps: float     = Field(STRICT_EPS, gt=0)
    singleton_rtol: float = Field(SINGLETON_RTOL, gt=0)
    schur_margin: float   = Field(0.0, ge=0, lt=1)


class SolverSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    solver: SolverName = "CLARABEL"
    feas_tol: float    = Field(FEAS_TOL, gt=0)
    max_iters: int     = Field(500, ge=10)
    fallback: bool     = True               # retry with SCS when the primary solver fails
    slack_rtol: float  = Field(SLACK_RTOL, gt=0)
    verbose: bool      = False


def default_solver_settings() -> SolverSettings:
    """Solver settings with the DDGAIN_SOLVER environment override applied."""
    name = os.environ.get("DDGAIN_SOLVER", "").strip().upper()
    if name in ("CLARABEL", "SCS"):
        return SolverSettings(solver=name)
    return SolverSettings()
