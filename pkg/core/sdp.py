"""
core/sdp.py - SDP bridge
Thin layer over cvxpy: named variables, symmetric block-matrix constraints,
solver selection with fallback, status mapping and the strict-feasibility
margin protocol (maximize t subject to F(x) >= t I, t <= 1).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

try:
    import cvxpy as cp
    HAS_CVXPY = True
except ImportError:  # pragma: no cover
    cp = None
    HAS_CVXPY = False

from core.exceptions import DimensionError, NotSymmetricError, SolverFailure
from core.linalg import as_matrix
from core.settings import STRICT_EPS, SolverSettings, default_solver_settings

logger = logging.getLogger(__name__)

SolveStatus = Literal["Optimal", "Infeasible", "Unbounded", "NumericalFailure"]
Block = Union["cp.Expression", np.ndarray, float, None]

_SYMMETRY_RTOL = 1e-9


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass
class SdpSolution:
    status: SolveStatus
    objective: Optional[float]
    values: Dict[str, Union[np.ndarray, float]] = field(default_factory=dict)
    slack: Dict[str, float] = field(default_factory=dict)   # min eigenvalue per named constraint
    solver: str = ""
    inaccurate: bool = False
    margin: Optional[float] = None                            # t* of the strict protocol

    @property
    def optimal(self) -> bool:
        return self.status == "Optimal"

    def value(self, name: str):
        if name not in self.values:
            raise KeyError(f"no value for variable '{name}' (status {self.status})")
        return self.values[name]


@dataclass
class _PsdConstraint:
    name: str
    expr: "cp.Expression"   # symmetrized
    size: int


# ---------------------------------------------------------------------------
# Block assembly
# ---------------------------------------------------------------------------

def block_matrix(blocks: Sequence[Sequence[Block]], row_sizes: Sequence[int],
                 col_sizes: Optional[Sequence[int]] = None) -> "cp.Expression":
    """Assemble an affine block matrix; None entries become zero blocks of the implied size."""
    col_sizes = list(row_sizes if col_sizes is None else col_sizes)
    if len(blocks) != len(row_sizes):
        raise DimensionError(f"{len(blocks)} block rows for {len(row_sizes)} row sizes")
    rows = []
    for i, row in enumerate(blocks):
        if len(row) != len(col_sizes):
            raise DimensionError(f"block row {i} has {len(row)} entries, expected {len(col_sizes)}")
        cells = []
        for j, blk in enumerate(row):
            shape = (row_sizes[i], col_sizes[j])
            if blk is None:
                cells.append(cp.Constant(np.zeros(shape)))
                continue
            expr = blk if isinstance(blk, cp.Expression) else cp.Constant(as_matrix(blk))
            if expr.ndim == 0:
                expr = cp.reshape(expr, (1, 1), order="F")
            if tuple(expr.shape) != shape:
                raise DimensionError(f"block ({i}, {j}) has shape {expr.shape}, expected {shape}")
            cells.append(expr)
        rows.append(cells)
    return cp.bmat(rows)


def padded_constant(M: np.ndarray, size: int) -> np.ndarray:
    """blkdiag(M, 0) as a numpy constant of the given size."""
    M = as_matrix(M)
    out = np.zeros((size, size))
    out[:M.shape[0], :M.shape[1]] = M
    return out


# ---------------------------------------------------------------------------
# Problem
# ---------------------------------------------------------------------------

_STATUS_MAP: Dict[str, Tuple[SolveStatus, bool]] = {
    "optimal":              ("Optimal", False),
    "optimal_inaccurate":   ("Optimal", True),
    "infeasible":           ("Infeasible", False),
    "infeasible_inaccurate": ("Infeasible", True),
    "unbounded":            ("Unbounded", False),
    "unbounded_inaccurate": ("Unbounded", True),
}


def _solver_options(name: str, s: SolverSettings) -> Dict[str, object]:
    if name == "CLARABEL":
        return {
            "max_iter": s.max_iters,
            "tol_feas": s.feas_tol,
            "tol_gap_abs": s.feas_tol,
            "tol_gap_rel": s.feas_tol,
            "verbose": s.verbose,
        }
    # first-order solver: looser accuracy, many more iterations
    eps = max(s.feas_tol, 1e-7)
    return {"max_iters": 200 * s.max_iters, "eps_abs": eps, "eps_rel": eps, "verbose": s.verbose}


class SdpProblem:
    """Named-variable SDP assembled from symmetric block matrices.

    Usage:
        prob = SdpProblem("lambda_model_opt")
        Q = prob.add_sym_var("Q", n)
        beta = prob.add_scalar_var("beta")
        prob.add_psd_constraint(block_matrix([[Q, ...], ...], sizes), "lmi")
        prob.minimize(beta)
        sol = prob.solve()
    """

    def __init__(self, name: str = "sdp", settings: Optional[SolverSettings] = None):
        if not HAS_CVXPY:
            raise SolverFailure("cvxpy is not installed")
        self.name = name
        self.settings = settings or default_solver_settings()
        self._vars: Dict[str, "cp.Variable"] = {}
        self._kinds: Dict[str, str] = {}
        self._constraints: List[_PsdConstraint] = []
        self._bounds: List[Tuple[str, float]] = []
        self._sense: str = "find"
        self._objective: Optional["cp.Expression"] = None

    # ── Variables ──────────────────────────────────────────────────────────
    def _register(self, name: str, var, kind: str):
        if name in self._vars:
            raise ValueError(f"variable '{name}' already declared")
        self._vars[name] = var
        self._kinds[name] = kind
        return var

    def add_sym_var(self, name: str, size: int) -> "cp.Variable":
        if size < 1:
            raise DimensionError(f"symmetric variable '{name}' needs size >= 1")
        return self._register(name, cp.Variable((size, size), symmetric=True, name=name), "sym")

    def add_rect_var(self, name: str, rows: int, cols: int) -> "cp.Variable":
        if rows < 1 or cols < 1:
            raise DimensionError(f"variable '{name}' needs positive dimensions")
        return self._register(name, cp.Variable((rows, cols), name=name), "rect")

    def add_scalar_var(self, name: str, lower_bound: Optional[float] = None) -> "cp.Variable":
        var = self._register(name, cp.Variable(name=name), "scalar")
        if lower_bound is not None:
            self._bounds.append((name, float(lower_bound)))
        return var

    # ── Constraints ────────────────────────────────────────────────────────
    def _assert_symmetric(self, expr: "cp.Expression", name: str) -> None:
        """Evaluate expr at random variable values and require expr == expr^T."""
        variables = expr.variables()
        saved = [v.value for v in variables]
        rng = np.random.default_rng(20240611)
        try:
            for _ in range(2):
                for v in variables:
                    draw = rng.standard_normal(v.shape)
                    if v.attributes.get("symmetric"):
                        draw = 0.5 * (draw + draw.T)
                    v.value = draw
                val = np.atleast_2d(np.asarray(expr.value, dtype=float))
                gap = np.max(np.abs(val - val.T)) if val.size else 0.0
                if gap > _SYMMETRY_RTOL * max(1.0, np.max(np.abs(val))):
                    raise NotSymmetricError(f"constraint '{name}' is not symmetric in its variables")
        finally:
            for v, old in zip(variables, saved):
                v.value = old

    def add_psd_constraint(self, expr, name: Optional[str] = None) -> str:
        """Register expr >= 0 (PSD); returns the constraint name."""
        if not isinstance(expr, cp.Expression):
            expr = cp.Constant(as_matrix(expr))
        if len(expr.shape) != 2 or expr.shape[0] != expr.shape[1]:
            raise DimensionError(f"PSD constraint needs a square expression, got {expr.shape}")
        name = name or f"c{len(self._constraints)}"
        if any(c.name == name for c in self._constraints):
            raise ValueError(f"constraint '{name}' already declared")
        self._assert_symmetric(expr, name)
        self._constraints.append(_PsdConstraint(name, 0.5 * (expr + expr.T), expr.shape[0]))
        return name

    # ── Objective ──────────────────────────────────────────────────────────
    def minimize(self, expr) -> None:
        self._sense, self._objective = "min", expr

    def maximize(self, expr) -> None:
        self._sense, self._objective = "max", expr

    def _cp_objective(self):
        if self._objective is None:
            return cp.Minimize(0)
        if self._sense == "max":
            return cp.Maximize(self._objective)
        return cp.Minimize(self._objective)

    def _bound_constraints(self) -> list:
        return [self._vars[name] >= lb for name, lb in self._bounds]

    # ── Solving ────────────────────────────────────────────────────────────
    def solve(self) -> SdpSolution:
        constraints = [c.expr >> 0 for c in self._constraints] + self._bound_constraints()
        return self._run(cp.Problem(self._cp_objective(), constraints))

    def strict_feasible(self, which: Optional[Sequence[str]] = None,
                        eps: float = STRICT_EPS) -> Tuple[bool, SdpSolution]:
        """Margin protocol: maximize t with the selected constraints >= t I and t <= 1.

        Strict feasibility is accepted when t* > eps. The objective set on the
        problem is ignored.
        """
        names = {c.name for c in self._constraints}
        selected = set(names if which is None else which)
        unknown = selected - names
        if unknown:
            raise ValueError(f"unknown constraints: {sorted(unknown)}")
        t = cp.Variable(name="margin")
        constraints = []
        for c in self._constraints:
            if c.name in selected:
                constraints.append(c.expr - t * np.eye(c.size) >> 0)
            else:
                constraints.append(c.expr >> 0)
        constraints += self._bound_constraints() + [t <= 1]
        sol = self._run(cp.Problem(cp.Maximize(t), constraints), margin=t)
        ok = sol.optimal and sol.margin is not None and sol.margin > eps
        logger.debug(f"{self.name}: strict margin t*={sol.margin} ({sol.status}) -> {ok}")
        return ok, sol

    def _attempts(self) -> List[str]:
        names = [self.settings.solver]
        if self.settings.fallback and "SCS" not in names:
            names.append("SCS")
        return names

    def _run(self, problem, margin=None) -> SdpSolution:
        last = SdpSolution(status="NumericalFailure", objective=None)
        for solver in self._attempts():
            try:
                problem.solve(solver=solver, **_solver_options(solver, self.settings))
            except (cp.error.SolverError, ValueError) as exc:
                logger.warning(f"{self.name}: solver {solver} failed ({exc})")
                last = SdpSolution(status="NumericalFailure", objective=None, solver=solver)
                continue
            status, inaccurate = _STATUS_MAP.get(problem.status, ("NumericalFailure", True))
            last = self._collect(problem, status, inaccurate, solver, margin)
            if status != "NumericalFailure":
                break
            logger.warning(f"{self.name}: solver {solver} returned status '{problem.status}'")
        return last

    def _collect(self, problem, status: SolveStatus, inaccurate: bool, solver: str,
                 margin) -> SdpSolution:
        sol = SdpSolution(status=status, objective=None, solver=solver, inaccurate=inaccurate)
        if status != "Optimal":
            return sol
        sol.objective = float(problem.value) if problem.value is not None else None
        for name, var in self._vars.items():
            if var.value is None:
                continue
            if self._kinds[name] == "scalar":
                sol.values[name] = float(var.value)
            else:
                val = np.asarray(var.value, dtype=float)
                sol.values[name] = 0.5 * (val + val.T) if self._kinds[name] == "sym" else val
        for c in self._constraints:
            val = c.expr.value
            if val is None:
                continue
            val = np.atleast_2d(np.asarray(val, dtype=float))
            lowest = float(np.linalg.eigvalsh(0.5 * (val + val.T))[0])
            sol.slack[c.name] = lowest
            if lowest < -self.settings.slack_rtol * max(1.0, float(np.max(np.abs(val)))):
                sol.inaccurate = True
                logger.warning(f"{self.name}: constraint '{c.name}' violated by {lowest:.3e}")
        if margin is not None and margin.value is not None:
            sol.margin = float(margin.value)
        return sol

    # ── Debug ──────────────────────────────────────────────────────────────
    def dump(self) -> str:
        """Human-readable listing of variables, constraints and objective."""
        lines = [f"SDP '{self.name}' ({self.settings.solver})", "variables:"]
        for name, var in self._vars.items():
            lines.append(f"  {name:<10} {self._kinds[name]:<7} shape={tuple(var.shape)}")
        for name, lb in self._bounds:
            lines.append(f"  {name} >= {lb:g}")
        lines.append("constraints:")
        for c in self._constraints:
            lines.append(f"  {c.name:<14} PSD size={c.size}")
        objective = "none" if self._objective is None else f"{self._sense} {self._objective}"
        lines.append(f"objective: {objective}")
        return "\n".join(lines)
