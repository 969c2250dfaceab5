"""
core/linalg.py - Linear-algebra primitives
Pseudoinverse, generalized Schur complements, Pi-class and QMI membership tests,
PSD square roots, Schur stability and rank with explicit relative tolerances.
Every symmetric-matrix input is symmetrized as (M + M^T)/2 on entry.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg as sla

from core.exceptions import DimensionError, NotPsdError, NotSymmetricError
from core.settings import PINV_RTOL, PSD_CLAMP_TOL, QMI_TOL

_TINY = np.finfo(float).tiny
SYMMETRY_RTOL = 1e-8


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array; scalars become 1x1."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def sym(M: np.ndarray) -> np.ndarray:
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got {M.shape}")
    return 0.5 * (M + M.T)


def scale_of(M: np.ndarray) -> float:
    """Spectral norm floored at the smallest positive float; the unit of relative tolerances."""
    return max(spectral_norm(M), _TINY)


def spectral_norm(M: np.ndarray) -> float:
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def require_symmetric(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Return the symmetrized matrix, rejecting inputs that are visibly non-symmetric."""
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got {M.shape}")
    if M.size and np.linalg.norm(M - M.T, 2) > SYMMETRY_RTOL * scale_of(M):
        raise NotSymmetricError(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymPartition:
    """Row/column split (q, r) of a (q+r)x(q+r) symmetric matrix."""
    q: int
    r: int

    def __post_init__(self):
        if self.q < 1 or self.r < 1:
            raise DimensionError(f"invalid partition (q={self.q}, r={self.r})")

    @property
    def size(self) -> int:
        return self.q + self.r

    def blocks(self, Pi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (Pi11, Pi12, Pi22) of a symmetric matrix sized by this partition."""
        Pi = sym(Pi)
        if Pi.shape != (self.size, self.size):
            raise DimensionError(f"matrix shape {Pi.shape} does not match partition ({self.q}, {self.r})")
        q = self.q
        return Pi[:q, :q], Pi[:q, q:], Pi[q:, q:]


# ---------------------------------------------------------------------------
# Pseudoinverse, Schur complement, rank
# ---------------------------------------------------------------------------

def pinv(M: np.ndarray, tol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse; singular values below tol * sigma_max are treated as zero."""
    M = as_matrix(M)
    if M.size == 0:
        return np.zeros((M.shape[1], M.shape[0]))
    return sla.pinv(M, atol=0.0, rtol=tol)


def gen_schur_complement(Pi: np.ndarray, part: SymPartition, tol: float = PINV_RTOL) -> np.ndarray:
    """Pi11 - Pi12 Pi22^+ Pi21."""
    P11, P12, P22 = part.blocks(Pi)
    return sym(P11 - P12 @ pinv(P22, tol) @ P12.T)


def numeric_rank(M: np.ndarray, tol: float = PINV_RTOL) -> int:
    M = as_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] <= 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def null_basis(M: np.ndarray, tol: float = PINV_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the right null space of M."""
    M = as_matrix(M)
    if M.size == 0:
        return np.eye(M.shape[1])
    return sla.null_space(M, rcond=tol)


# ---------------------------------------------------------------------------
# Eigenvalue tests
# ---------------------------------------------------------------------------

def min_eig(M: np.ndarray) -> float:
    M = require_symmetric(M)
    if M.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(M)[0])


def max_eig(M: np.ndarray) -> float:
    M = require_symmetric(M)
    if M.size == 0:
        return -np.inf
    return float(np.linalg.eigvalsh(M)[-1])


def spectral_radius(A: np.ndarray) -> float:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got {A.shape}")
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def is_schur(A: np.ndarray, tol: float = 0.0) -> bool:
    """True when every eigenvalue of A lies strictly inside the disc of radius 1 - tol."""
    return spectral_radius(A) < 1.0 - tol


def psd_sqrt(M: np.ndarray, tol: float = PSD_CLAMP_TOL) -> np.ndarray:
    """Symmetric PSD square root; eigenvalues in [-tol*||M||, 0) are clamped to zero."""
    M = require_symmetric(M)
    if M.size == 0:
        return M.copy()
    w, V = np.linalg.eigh(M)
    if w[0] < -tol * scale_of(M):
        raise NotPsdError(f"matrix has eigenvalue {w[0]:.3e} below the PSD tolerance")
    w = np.clip(w, 0.0, None)
    return sym((V * np.sqrt(w)) @ V.T)


def psd_inv_sqrt(M: np.ndarray, tol: float = PSD_CLAMP_TOL) -> np.ndarray:
    """M^{-1/2} for a positive definite M."""
    M = require_symmetric(M)
    w, V = np.linalg.eigh(M)
    if w.size and w[0] <= tol * scale_of(M):
        raise NotPsdError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return sym((V / np.sqrt(w)) @ V.T)


# ---------------------------------------------------------------------------
# Pi-class and QMI sets
# ---------------------------------------------------------------------------

def in_pi_class(Pi: np.ndarray, part: SymPartition, tol: float = QMI_TOL,
                rank_tol: float = PINV_RTOL) -> bool:
    """Pi22 <= 0, Pi|Pi22 >= 0 and ker Pi22 contained in ker Pi12, all up to tol * ||Pi||."""
    P11, P12, P22 = part.blocks(Pi)
    s = scale_of(sym(Pi))
    if part.r == 0:
        return min_eig(P11) >= -tol * s
    if max_eig(P22) > tol * s:
        return False
    if min_eig(gen_schur_complement(Pi, part, rank_tol)) < -tol * s:
        return False
    kernel = null_basis(P22, rank_tol)
    if kernel.shape[1] and spectral_norm(P12 @ kernel) > tol * s:
        return False
    return True


def qmi_value(Pi: np.ndarray, part: SymPartition, Z: np.ndarray) -> np.ndarray:
    """[I; Z]^T Pi [I; Z] for Z of shape (r, q)."""
    Z = as_matrix(Z, "Z")
    if Z.shape != (part.r, part.q):
        raise DimensionError(f"Z has shape {Z.shape}, expected ({part.r}, {part.q})")
    P11, P12, P22 = part.blocks(Pi)
    cross = P12 @ Z
    return sym(P11 + cross + cross.T + Z.T @ P22 @ Z)


def qmi_member(Pi: np.ndarray, part: SymPartition, Z: np.ndarray, strict: bool = False,
               tol: float = QMI_TOL) -> bool:
    """Membership of Z in Z_r(Pi) (non-strict) or Z_r^+(Pi) (strict).

    The tolerance is relative to ||Pi|| * (1 + ||Z||^2), the size of the terms
    that cancel in the quadratic form.
    """
    value = qmi_value(Pi, part, Z)
    scale = scale_of(sym(Pi)) * (1.0 + spectral_norm(Z) ** 2)
    lowest = min_eig(value)
    if strict:
        return lowest > tol * scale
    return lowest >= -tol * scale
