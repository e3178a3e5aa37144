"""Independent reference computations used by the tests.

Nothing here imports the solver or the Shapley code it checks.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def vertex_enumeration(c, a_eq, b_eq, a_ub, b_ub, lower, upper, tol=1e-9):
    """Minimum of c·x over a bounded polytope by trying every basis of active constraints.

    Returns (objective, x) or (None, None) when no vertex is feasible.
    """
    n = len(c)
    ineq_a = [row for row in a_ub] + [-e for e in np.eye(n)] + [e for e in np.eye(n)]
    ineq_b = list(b_ub) + [-lo for lo in lower] + list(upper)
    ineq_a, ineq_b = np.array(ineq_a).reshape(-1, n), np.array(ineq_b)
    n_eq = len(b_eq)
    best, best_x = None, None
    for active in itertools.combinations(range(len(ineq_b)), n - n_eq if n >= n_eq else 0):
        mat = np.vstack([np.asarray(a_eq).reshape(-1, n), ineq_a[list(active)]])
        rhs = np.concatenate([np.asarray(b_eq, dtype=float), ineq_b[list(active)]])
        if mat.shape[0] != n or abs(np.linalg.det(mat)) < 1e-10:
            continue
        x = np.linalg.solve(mat, rhs)
        if n_eq and np.max(np.abs(np.asarray(a_eq) @ x - b_eq)) > 1e-7:
            continue
        if np.any(ineq_a @ x - ineq_b > 1e-7):
            continue
        val = float(np.dot(c, x))
        if best is None or val < best - tol:
            best, best_x = val, x
    return best, best_x


def shapley_by_orders(players, worth):
    """Average marginal contribution over all arrival orders. ``worth`` takes a frozenset."""
    totals = {p: 0.0 for p in players}
    count = 0
    for order in itertools.permutations(players):
        joined = frozenset()
        for p in order:
            totals[p] += worth(joined | {p}) - worth(joined)
            joined = joined | {p}
        count += 1
    return {p: totals[p] / count for p in players}


def wind_kwh_by_hand(v, density=1.225, cp=0.3, radius=2.63, hours=1.0):
    area = math.pi * radius * radius
    return 0.5 * density * cp * area * v**3 * hours / 1000.0
