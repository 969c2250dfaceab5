"""
core/data_model.py - Trajectory data, noise model and the consistent-system set
Data matrices (U-, X-, X+), the informativity matrix N, boundedness and singleton
tests, recovery of the true system and the affine parameterization of Sigma_D.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.exceptions import DimensionError, NoiseModelError, UnboundedSetError
from core.linalg import (
    SymPartition, as_matrix, in_pi_class, max_eig, min_eig, numeric_rank,
    psd_inv_sqrt, psd_sqrt, qmi_member, qmi_value, scale_of, spectral_norm, sym,
)
from core.settings import PINV_RTOL, PSD_CLAMP_TOL, QMI_TOL, SINGLETON_RTOL

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# System and data containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SystemModel:
    A: np.ndarray   # n x n
    B: np.ndarray   # n x m

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        n = A.shape[0]
        if A.shape != (n, n) or n < 1:
            raise DimensionError(f"A must be square with n >= 1, got {A.shape}")
        if B.shape[0] != n or B.shape[1] < 1:
            raise DimensionError(f"B must be n x m with m >= 1, got {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def closed_loop(self, K: np.ndarray) -> np.ndarray:
        K = as_matrix(K, "K")
        if K.shape != (self.m, self.n):
            raise DimensionError(f"K must be {self.m} x {self.n}, got {K.shape}")
        return self.A + self.B @ K

    @property
    def stacked(self) -> np.ndarray:
        """[A B], shape n x (n+m)."""
        return np.hstack([self.A, self.B])


@dataclass
class TrajectoryData:
    """States x(0..T) as rows, inputs u(0..T-1) as rows, optional disturbance rows w(0..T-1)."""
    u: np.ndarray                     # T x m
    x: np.ndarray                     # (T+1) x n
    w: Optional[np.ndarray] = None    # T x n, only when generated synthetically

    def __post_init__(self):
        self.u = as_matrix(self.u, "u")
        self.x = as_matrix(self.x, "x")
        if self.w is not None:
            self.w = as_matrix(self.w, "w")
        T = self.u.shape[0]
        if T < 1 or self.u.shape[1] < 1:
            raise DimensionError(f"need T >= 1 input samples with m >= 1, got {self.u.shape}")
        if self.x.shape[0] != T + 1 or self.x.shape[1] < 1:
            raise DimensionError(f"x must have T+1 = {T + 1} rows, got {self.x.shape}")
        if self.w is not None and self.w.shape != (T, self.x.shape[1]):
            raise DimensionError(f"w must be {T} x {self.x.shape[1]}, got {self.w.shape}")

    @property
    def T(self) -> int:
        return self.u.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def m(self) -> int:
        return self.u.shape[1]

    def truncated(self, T: int) -> "TrajectoryData":
        if not 1 <= T <= self.T:
            raise DimensionError(f"cannot truncate {self.T} samples to {T}")
        w = None if self.w is None else self.w[:T]
        return TrajectoryData(u=self.u[:T], x=self.x[:T + 1], w=w)


@dataclass(frozen=True, eq=False)
class DataMatrices:
    U_minus: np.ndarray   # m x T
    X_minus: np.ndarray   # n x T
    X_plus: np.ndarray    # n x T

    @property
    def n(self) -> int:
        return self.X_minus.shape[0]

    @property
    def m(self) -> int:
        return self.U_minus.shape[0]

    @property
    def T(self) -> int:
        return self.X_minus.shape[1]

    @property
    def regressor(self) -> np.ndarray:
        """[X-; U-], shape (n+m) x T."""
        return np.vstack([self.X_minus, self.U_minus])


# ---------------------------------------------------------------------------
# Noise model
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Quadratic noise bound: W^T belongs to Z_T(Phi) with Phi = [[Phi11, Phi12], [Phi21, Phi22]]."""
    phi11: np.ndarray   # n x n
    phi12: np.ndarray   # n x T
    phi22: np.ndarray   # T x T

    def __post_init__(self):
        p11 = sym(self.phi11)
        p22 = sym(self.phi22)
        p12 = as_matrix(self.phi12, "Phi12")
        if p12.shape != (p11.shape[0], p22.shape[0]):
            raise DimensionError(f"Phi12 must be {p11.shape[0]} x {p22.shape[0]}, got {p12.shape}")
        object.__setattr__(self, "phi11", p11)
        object.__setattr__(self, "phi12", p12)
        object.__setattr__(self, "phi22", p22)

    @property
    def n(self) -> int:
        return self.phi11.shape[0]

    @property
    def T(self) -> int:
        return self.phi22.shape[0]

    @property
    def partition(self) -> SymPartition:
        return SymPartition(self.n, self.T)

    def full(self) -> np.ndarray:
        return np.block([[self.phi11, self.phi12], [self.phi12.T, self.phi22]])

    def validate(self, tol: float = QMI_TOL) -> "NoiseModel":
        """Raise NoiseModelError unless Phi is in the Pi-class and Phi22 < 0."""
        if min_eig(-self.phi22) <= tol * scale_of(self.phi22):
            raise NoiseModelError("Phi22 must be negative definite")
        if not in_pi_class(self.full(), self.partition, tol):
            raise NoiseModelError("Phi is not in the admissible class (Phi22 <= 0, Phi|Phi22 >= 0, kernel inclusion)")
        return self

    def admits(self, W: np.ndarray, tol: float = QMI_TOL) -> bool:
        """True when the disturbance matrix W (n x T, columns w(t)) satisfies the bound."""
        W = as_matrix(W, "W")
        return qmi_member(self.full(), self.partition, W.T, strict=False, tol=tol)

    @property
    def is_energy_bound(self) -> bool:
        return not np.any(self.phi12)

    @classmethod
    def noise_free(cls, n: int, T: int) -> "NoiseModel":
        """Phi11 = 0, Phi12 = 0, Phi22 = -I: only W = 0 is admitted."""
        return cls(np.zeros((n, n)), np.zeros((n, T)), -np.eye(T))


def noise_norm_bound(n: int, T: int, eps: float) -> NoiseModel:
    """Noise model for ||W-|| <= eps: Phi11 = eps^2 I, Phi12 = 0, Phi22 = -I."""
    if n < 1 or T < 1:
        raise DimensionError(f"need n >= 1 and T >= 1, got n={n}, T={T}")
    if not eps > 0:
        raise NoiseModelError(f"noise bound must be positive, got {eps}")
    return NoiseModel(eps ** 2 * np.eye(n), np.zeros((n, T)), -np.eye(T))


# ---------------------------------------------------------------------------
# Simulation and data matrices
# ---------------------------------------------------------------------------

def simulate(sys: SystemModel, x0, u, w=None) -> TrajectoryData:
    """Roll x(t+1) = A x(t) + B u(t) + w(t) forward for the given input rows."""
    u = as_matrix(u, "u")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    T = u.shape[0]
    if x0.shape[0] != sys.n or u.shape[1] != sys.m:
        raise DimensionError(f"x0/u do not match n={sys.n}, m={sys.m}")
    w = np.zeros((T, sys.n)) if w is None else as_matrix(w, "w")
    if w.shape != (T, sys.n):
        raise DimensionError(f"w must be {T} x {sys.n}, got {w.shape}")
    x = np.zeros((T + 1, sys.n))
    x[0] = x0
    for t in range(T):
        x[t + 1] = sys.A @ x[t] + sys.B @ u[t] + w[t]
    return TrajectoryData(u=u, x=x, w=w)


def to_data_matrices(data: TrajectoryData) -> DataMatrices:
    return DataMatrices(
        U_minus=data.u.T.copy(),
        X_minus=data.x[:-1].T.copy(),
        X_plus=data.x[1:].T.copy(),
    )


def disturbance_matrix(dm: DataMatrices, sys: SystemModel) -> np.ndarray:
    """W- = X+ - A X- - B U- implied by a candidate system."""
    return dm.X_plus - sys.A @ dm.X_minus - sys.B @ dm.U_minus


# ---------------------------------------------------------------------------
# Informativity matrix N
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InformativityMatrix:
    """N with block sizes (n, n, m)."""
    N: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        N = sym(self.N)
        size = 2 * self.n + self.m
        if N.shape != (size, size):
            raise DimensionError(f"N must be {size} x {size}, got {N.shape}")
        object.__setattr__(self, "N", N)

    @property
    def size(self) -> int:
        return 2 * self.n + self.m

    @property
    def N11(self) -> np.ndarray:
        return self.N[:self.n, :self.n]

    @property
    def left(self) -> np.ndarray:
        """[N21; N31], shape (n+m) x n."""
        return self.N[self.n:, :self.n]

    @property
    def lower(self) -> np.ndarray:
        """[[N22, N23], [N32, N33]], shape (n+m) x (n+m)."""
        return self.N[self.n:, self.n:]

    @property
    def partition(self) -> SymPartition:
        return SymPartition(self.n, self.n + self.m)

    def normalized(self) -> Tuple["InformativityMatrix", float]:
        """N / ||N|| and the scale; Sigma_D is invariant under positive scaling of N."""
        s = scale_of(self.N)
        return InformativityMatrix(self.N / s, self.n, self.m), s

    def padded(self, size: int) -> np.ndarray:
        """blkdiag(N, 0) of the requested total size."""
        if size < self.size:
            raise DimensionError(f"cannot pad N of size {self.size} to {size}")
        out = np.zeros((size, size))
        out[:self.size, :self.size] = self.N
        return out


def build_N(dm: DataMatrices, noise: NoiseModel) -> InformativityMatrix:
    """N = [I X+; 0 -X-; 0 -U-] Phi [I X+; 0 -X-; 0 -U-]^T."""
    n, m, T = dm.n, dm.m, dm.T
    if noise.n != n or noise.T != T:
        raise DimensionError(f"noise model is sized (n={noise.n}, T={noise.T}), data is (n={n}, T={T})")
    C = np.vstack([dm.X_plus, -dm.X_minus, -dm.U_minus])   # (2n+m) x T
    N = C @ noise.phi22 @ C.T
    N[:n, :n] += noise.phi11
    if not noise.is_energy_bound:
        cross = noise.phi12 @ C.T                           # n x (2n+m)
        N[:n, :] += cross
        N[:, :n] += cross.T
    return InformativityMatrix(N, n, m)


def is_consistent(N: InformativityMatrix, sys: SystemModel, tol: float = QMI_TOL) -> bool:
    """(A, B) belongs to Sigma_D, i.e. [A B]^T is in Z_{n+m}(N)."""
    if sys.n != N.n or sys.m != N.m:
        raise DimensionError("system and informativity matrix sizes differ")
    return qmi_member(N.N, N.partition, sys.stacked.T, strict=False, tol=tol)


def is_bounded(dm: DataMatrices, tol: float = PINV_RTOL) -> bool:
    """Sigma_D is bounded iff [X-; U-] has full row rank n+m."""
    return numeric_rank(dm.regressor, tol) == dm.n + dm.m


def has_bounded_sigma(N: InformativityMatrix, tol: float = PSD_CLAMP_TOL) -> bool:
    """Lower block of N negative definite (full-rank data when Phi22 < 0)."""
    return max_eig(N.lower) < -tol * scale_of(N.N)


def _require_bounded(N: InformativityMatrix) -> None:
    if not has_bounded_sigma(N):
        raise UnboundedSetError("lower block of N is not negative definite; Sigma_D is unbounded")


def singleton_matrix(N: InformativityMatrix) -> np.ndarray:
    """N11 - [N21; N31]^T lower^{-1} [N21; N31] (the Schur complement N|lower)."""
    _require_bounded(N)
    return sym(N.N11 - N.left.T @ np.linalg.solve(N.lower, N.left))


def singleton_defect(N: InformativityMatrix) -> float:
    """Spectral norm of N|lower; zero exactly when Sigma_D is a single system."""
    return spectral_norm(singleton_matrix(N))


def is_singleton(N: InformativityMatrix, rtol: float = SINGLETON_RTOL) -> bool:
    return singleton_defect(N) <= rtol * scale_of(N.N)


def recover_true(N: InformativityMatrix) -> SystemModel:
    """Center of Sigma_D, [A B] = -[N21; N31]^T lower^{-1}; the true system when Sigma_D is a singleton."""
    _require_bounded(N)
    AB = -np.linalg.solve(N.lower, N.left).T
    return SystemModel(AB[:, :N.n], AB[:, N.n:])


# ---------------------------------------------------------------------------
# Parameterization of Sigma_D
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SigmaParam:
    """Sigma_D = {[A B] = center + L S R : S S^T <= I}."""
    center: np.ndarray   # n x (n+m)
    L: np.ndarray        # n x n
    R: np.ndarray        # (n+m) x (n+m)
    n: int
    m: int

    @property
    def center_system(self) -> SystemModel:
        return SystemModel(self.center[:, :self.n], self.center[:, self.n:])


def sigma_param(N: InformativityMatrix) -> SigmaParam:
    _require_bounded(N)
    center = recover_true(N).stacked
    L = psd_sqrt(singleton_matrix(N))
    R = psd_inv_sqrt(-N.lower)
    return SigmaParam(center=center, L=L, R=R, n=N.n, m=N.m)


def sample_sigma(p: SigmaParam, S: np.ndarray, tol: float = 1e-9) -> SystemModel:
    """Member of Sigma_D for a contraction S (n x (n+m), ||S|| <= 1)."""
    S = as_matrix(S, "S")
    if S.shape != (p.n, p.n + p.m):
        raise DimensionError(f"S must be {p.n} x {p.n + p.m}, got {S.shape}")
    if spectral_norm(S) > 1.0 + tol:
        raise DimensionError(f"S must be a contraction, ||S|| = {spectral_norm(S):.6f}")
    AB = p.center + p.L @ S @ p.R
    return SystemModel(AB[:, :p.n], AB[:, p.n:])


def draw_contraction(rng: np.random.Generator, rows: int, cols: int, radius: float = 1.0,
                     on_boundary: bool = False) -> np.ndarray:
    """Gaussian matrix scaled to norm <= radius (exactly radius when on_boundary)."""
    G = rng.standard_normal((rows, cols))
    norm = spectral_norm(G)
    if norm == 0.0:
        return G
    if on_boundary:
        return G * (radius / norm)
    return G * (radius / max(1.0, norm))


def consistency_residual(N: InformativityMatrix, sys: SystemModel) -> float:
    """Smallest eigenvalue of [I; Z]^T N [I; Z] for Z = [A B]^T (>= 0 on Sigma_D)."""
    return min_eig(qmi_value(N.N, N.partition, sys.stacked.T))
