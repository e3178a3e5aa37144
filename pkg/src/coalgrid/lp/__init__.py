"""Standard-form linear programs and the embedded simplex solver."""
from .kernels import BACKEND
from .problem import LpBuilder, LpStructureError, Row, StandardLp, Violation, check_feasible, dump_lp
from .simplex import FEAS_TOL, PIVOT_TOL, LpSolution, SolverStalled, Status, solve_lp

__all__ = [
    "BACKEND",
    "FEAS_TOL",
    "PIVOT_TOL",
    "LpBuilder",
    "LpSolution",
    "LpStructureError",
    "Row",
    "SolverStalled",
    "StandardLp",
    "Status",
    "Violation",
    "check_feasible",
    "dump_lp",
    "solve_lp",
]
