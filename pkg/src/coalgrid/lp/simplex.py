"""Two-phase bounded-variable primal simplex on a dense tableau.

Pricing is Dantzig (largest reduced cost); after a run of degenerate pivots the
solver switches to Bland's rule until it makes progress again. Nonbasic columns
sit at either bound, so upper bounds never become rows.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import AT_LOWER, AT_UPPER, BARRED, BASIC
from .problem import StandardLp

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
DEGENERATE_RUN = 50


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class SolverStalled(RuntimeError):
    """Iteration cap hit before the simplex reached a terminal status."""


@dataclass(frozen=True)
class LpSolution:
    status: Status
    x: np.ndarray | None
    objective_value: float | None
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Tableau:
    """Working state shared by both phases."""

    def __init__(self, lp: StandardLp, feas_tol: float, pivot_tol: float):
        self.feas_tol = feas_tol
        self.pivot_tol = pivot_tol
        n = lp.num_vars
        a_eq, b_eq, a_ub, b_ub = lp.dense()
        m_eq, m_ub = a_eq.shape[0], a_ub.shape[0]
        m = m_eq + m_ub
        lower = lp.lower
        width = lp.upper - lower

        # shift every column to a zero lower bound
        rhs = np.concatenate([b_eq - a_eq @ lower, b_ub - a_ub @ lower])
        core = np.zeros((m, n + m_ub))
        core[:m_eq, :n] = a_eq
        core[m_eq:, :n] = a_ub
        core[m_eq + np.arange(m_ub), n + np.arange(m_ub)] = 1.0

        # rows whose slack can start basic keep it; the rest get an artificial
        needs_art = np.ones(m, dtype=bool)
        needs_art[m_eq:] = rhs[m_eq:] < 0
        flip = rhs < 0
        core[flip] *= -1.0
        rhs = np.abs(rhs)
        art_rows = np.flatnonzero(needs_art)
        n_art = art_rows.size

        self.n_struct = n
        self.n_slack = m_ub
        self.n_art = n_art
        self.m = m
        total = n + m_ub + n_art
        self.T = np.zeros((m + 1, total))
        self.T[:m, : n + m_ub] = core
        self.T[art_rows, n + m_ub + np.arange(n_art)] = 1.0
        self.A = self.T[:m].copy()
        self.b = rhs.copy()

        self.ub = np.concatenate([width, np.full(m_ub, np.inf), np.full(n_art, np.inf)])
        self.basis = np.empty(m, dtype=np.intp)
        slack_rows = np.flatnonzero(~needs_art)
        self.basis[slack_rows] = n + (slack_rows - m_eq)
        self.basis[art_rows] = n + m_ub + np.arange(n_art)
        self.beta = rhs.copy()
        self.state = np.full(total, AT_LOWER, dtype=np.int8)
        self.state[self.basis] = BASIC
        self.state[(self.ub <= 0.0) & (self.state != BASIC)] = BARRED
        self.lower = lower
        self.cost = np.concatenate([lp.objective, np.zeros(m_ub + n_art)])
        self.iterations = 0

    @property
    def art_start(self) -> int:
        return self.n_struct + self.n_slack

    def nonbasic_values(self) -> np.ndarray:
        vals = np.zeros(self.T.shape[1])
        up = self.state == AT_UPPER
        vals[up] = self.ub[up]
        return vals

    def set_costs(self, c: np.ndarray) -> None:
        self.c = c
        m = self.m
        self.T[m] = c - c[self.basis] @ self.T[:m]
        self.T[m, self.basis] = 0.0

    def refactor(self) -> None:
        """Rebuild the tableau from the original rows to shed accumulated round-off."""
        m = self.m
        B = self.A[:, self.basis]
        self.T[:m] = np.linalg.solve(B, self.A)
        self.T[:m, self.basis] = np.eye(m)
        xn = self.nonbasic_values()
        xn[self.basis] = 0.0
        self.beta = np.linalg.solve(B, self.b - self.A @ xn)
        self.set_costs(self.c)

    def run(self, max_iter: int) -> Status:
        m = self.m
        T = self.T
        degenerate = 0
        bland = False
        ub_basic = self.ub[self.basis]
        harris = self.feas_tol * 0.1
        while True:
            if self.iterations >= max_iter:
                raise SolverStalled(f"simplex exceeded {max_iter} iterations")
            q, direction = kernels.select_entering(T[m], self.state, self.pivot_tol, bland)
            if q < 0:
                return Status.OPTIMAL
            self.iterations += 1
            r, theta = kernels.ratio_test(
                T, q, self.beta, ub_basic, self.basis, direction, self.pivot_tol, harris, bland
            )
            flip = self.ub[q] <= theta
            if flip:
                theta = self.ub[q]
            if math.isinf(theta):
                self.unbounded_column = q
                return Status.UNBOUNDED
            if theta > 1e-12:
                degenerate = 0
                bland = False
            else:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN and not bland:
                    log.debug("degenerate run of %d pivots; switching to Bland's rule", degenerate)
                    bland = True
            if theta:
                self.beta -= (direction * theta) * T[:m, q]
            if flip:
                self.state[q] = AT_UPPER if self.state[q] == AT_LOWER else AT_LOWER
                continue
            leaving = self.basis[r]
            alpha = T[r, q] * direction
            if alpha > 0:
                self.state[leaving] = AT_LOWER
            else:
                self.state[leaving] = AT_UPPER
            if self.ub[leaving] <= 0.0:
                self.state[leaving] = BARRED
            start = 0.0 if self.state[q] == AT_LOWER else self.ub[q]
            self.beta[r] = start + direction * theta
            kernels.pivot(T, r, q)
            self.basis[r] = q
            self.state[q] = BASIC
            ub_basic[r] = self.ub[q]


def solve_lp(problem: StandardLp, feas_tol: float = FEAS_TOL, pivot_tol: float = PIVOT_TOL) -> LpSolution:
    """Solve ``problem`` to optimality or certify it infeasible or unbounded.

    Raises :class:`LpStructureError` for malformed input and
    :class:`SolverStalled` if the iteration cap ``50 * (vars + rows)`` is hit.
    """
    if feas_tol <= 0 or pivot_tol <= 0:
        raise ValueError("tolerances must be positive")
    problem.validate()
    tab = _Tableau(problem, feas_tol, pivot_tol)
    max_iter = 50 * (problem.num_vars + problem.num_rows) + 50

    if tab.n_art:
        phase1 = np.zeros(tab.T.shape[1])
        phase1[tab.art_start :] = 1.0
        tab.set_costs(phase1)
        status = tab.run(max_iter)
        if status is not Status.OPTIMAL:  # phase 1 is bounded below by 0
            raise SolverStalled("phase 1 reported an unbounded ray")
        tab.refactor()
        infeas = float(np.sum(tab.beta[tab.basis >= tab.art_start]))
        if infeas > feas_tol:
            return LpSolution(Status.INFEASIBLE, None, None, tab.iterations)
        _drive_out_artificials(tab)
        tab.ub[tab.art_start :] = 0.0
        nonbasic_art = np.arange(tab.art_start, tab.T.shape[1])
        nonbasic_art = nonbasic_art[tab.state[nonbasic_art] != BASIC]
        tab.state[nonbasic_art] = BARRED

    tab.set_costs(tab.cost)
    for _ in range(3):
        status = tab.run(max_iter)
        if status is Status.UNBOUNDED:
            return LpSolution(Status.UNBOUNDED, None, None, tab.iterations)
        tab.refactor()
        # fresh reduced costs occasionally expose one more improving column
        if kernels.select_entering(tab.T[tab.m], tab.state, pivot_tol, False)[0] < 0:
            break
    values = tab.nonbasic_values()
    values[tab.basis] = tab.beta
    x = problem.lower + values[: tab.n_struct]
    # clip round-off onto the box; rows are audited separately
    x = np.minimum(np.maximum(x, problem.lower), problem.upper)
    return LpSolution(Status.OPTIMAL, x, problem.evaluate(x), tab.iterations)


def _drive_out_artificials(tab: _Tableau) -> None:
    """Pivot zero-valued basic artificials onto structural or slack columns where possible."""
    m = tab.m
    for r in range(m):
        if tab.basis[r] < tab.art_start:
            continue
        row = np.abs(tab.T[r, : tab.art_start])
        row[tab.state[: tab.art_start] == BASIC] = 0.0
        row[tab.state[: tab.art_start] == BARRED] = 0.0
        j = int(np.argmax(row)) if row.size else -1
        if j < 0 or row[j] <= 1e-7:
            continue  # redundant row: artificial stays basic, pinned at zero
        leaving = tab.basis[r]
        value = 0.0 if tab.state[j] == AT_LOWER else tab.ub[j]
        kernels.pivot(tab.T, r, j)
        tab.state[leaving] = BARRED
        tab.basis[r] = j
        tab.state[j] = BASIC
        tab.beta[r] = value
    tab.c = np.zeros(tab.T.shape[1])
    tab.refactor()
