"""Standard-form LP container, a small builder with a name registry, and the feasibility audit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, NamedTuple

import numpy as np


class LpStructureError(ValueError):
    """A StandardLp (or a vector handed to it) violates its structural invariants."""


class Row(NamedTuple):
    cols: np.ndarray  # int64 column indices
    coefs: np.ndarray  # float64 coefficients
    rhs: float

    def dot(self, x: np.ndarray) -> float:
        return float(np.dot(self.coefs, x[self.cols]))


@dataclass(frozen=True)
class StandardLp:
    """minimize objective·x + objective_offset

    subject to  eq_rows:  row·x == rhs
                ub_rows:  row·x <= rhs
                lower <= x <= upper   (lower finite, upper may be +inf)

    ``var_names`` maps a hashable key, usually ``(household, kind, slot)``,
    to its column.
    """

    num_vars: int
    objective: np.ndarray
    eq_rows: tuple[Row, ...]
    ub_rows: tuple[Row, ...]
    lower: np.ndarray
    upper: np.ndarray
    var_names: Mapping[Hashable, int] = field(default_factory=dict)
    objective_offset: float = 0.0
    row_names: tuple[tuple[Hashable, ...], tuple[Hashable, ...]] = ((), ())

    @property
    def num_rows(self) -> int:
        return len(self.eq_rows) + len(self.ub_rows)

    def validate(self) -> None:
        n = self.num_vars
        if n < 0:
            raise LpStructureError("num_vars must be nonnegative")
        for label, arr in (("objective", self.objective), ("lower", self.lower), ("upper", self.upper)):
            if arr.shape != (n,):
                raise LpStructureError(f"{label} has shape {arr.shape}, expected ({n},)")
        if not np.all(np.isfinite(self.objective)):
            raise LpStructureError("objective coefficients must be finite")
        if not np.all(np.isfinite(self.lower)):
            raise LpStructureError("lower bounds must be finite")
        if np.any(np.isnan(self.upper)) or np.any(self.upper == -np.inf):
            raise LpStructureError("upper bounds must be finite or +inf")
        bad = np.flatnonzero(self.lower > self.upper)
        if bad.size:
            raise LpStructureError(f"lower > upper for columns {bad[:10].tolist()}")
        for kind, rows in (("eq", self.eq_rows), ("ub", self.ub_rows)):
            for i, row in enumerate(rows):
                if row.cols.shape != row.coefs.shape:
                    raise LpStructureError(f"{kind} row {i}: cols/coefs length mismatch")
                if row.cols.size and (row.cols.min() < 0 or row.cols.max() >= n):
                    raise LpStructureError(f"{kind} row {i} references a column outside 0..{n - 1}")
                if not math.isfinite(row.rhs) or not np.all(np.isfinite(row.coefs)):
                    raise LpStructureError(f"{kind} row {i} has a non-finite entry")
        if self.var_names:
            idx = sorted(self.var_names.values())
            if idx != list(range(n)):
                raise LpStructureError("var_names is not a bijection onto 0..num_vars-1")

    def dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return (A_eq, b_eq, A_ub, b_ub) as dense arrays."""
        n = self.num_vars
        a_eq = np.zeros((len(self.eq_rows), n))
        a_ub = np.zeros((len(self.ub_rows), n))
        for mat, rows in ((a_eq, self.eq_rows), (a_ub, self.ub_rows)):
            for i, row in enumerate(rows):
                np.add.at(mat[i], row.cols, row.coefs)
        b_eq = np.array([r.rhs for r in self.eq_rows], dtype=float)
        b_ub = np.array([r.rhs for r in self.ub_rows], dtype=float)
        return a_eq, b_eq, a_ub, b_ub

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.objective @ x) + self.objective_offset

    def index(self, key: Hashable) -> int:
        try:
            return self.var_names[key]
        except KeyError:
            raise LpStructureError(f"no variable registered under {key!r}") from None


class LpBuilder:
    """Incrementally register named columns and sparse rows."""

    def __init__(self) -> None:
        self._names: dict[Hashable, int] = {}
        self._cost: list[float] = []
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._eq: list[Row] = []
        self._ub: list[Row] = []
        self._eq_names: list[Hashable] = []
        self._ub_names: list[Hashable] = []
        self.offset = 0.0

    def add_var(self, key: Hashable, lower: float = 0.0, upper: float = math.inf, cost: float = 0.0) -> int:
        if key in self._names:
            raise LpStructureError(f"duplicate variable {key!r}")
        j = len(self._cost)
        self._names[key] = j
        self._cost.append(float(cost))
        self._lower.append(float(lower))
        self._upper.append(float(upper))
        return j

    def add_cost(self, col: int, cost: float) -> None:
        self._cost[col] += cost

    def var(self, key: Hashable) -> int:
        return self._names[key]

    @staticmethod
    def _row(terms: Iterable[tuple[int, float]], rhs: float) -> Row:
        merged: dict[int, float] = {}
        for j, c in terms:
            merged[j] = merged.get(j, 0.0) + c
        cols = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
        coefs = np.fromiter(merged.values(), dtype=float, count=len(merged))
        return Row(cols, coefs, float(rhs))

    def add_eq(self, terms: Iterable[tuple[int, float]], rhs: float, name: Hashable = None) -> None:
        self._eq.append(self._row(terms, rhs))
        self._eq_names.append(name)

    def add_ub(self, terms: Iterable[tuple[int, float]], rhs: float, name: Hashable = None) -> None:
        self._ub.append(self._row(terms, rhs))
        self._ub_names.append(name)

    def build(self) -> StandardLp:
        lp = StandardLp(
            num_vars=len(self._cost),
            objective=np.array(self._cost, dtype=float),
            eq_rows=tuple(self._eq),
            ub_rows=tuple(self._ub),
            lower=np.array(self._lower, dtype=float),
            upper=np.array(self._upper, dtype=float),
            var_names=dict(self._names),
            objective_offset=self.offset,
            row_names=(tuple(self._eq_names), tuple(self._ub_names)),
        )
        lp.validate()
        return lp


@dataclass(frozen=True)
class Violation:
    kind: str  # "eq", "ub", "lower", "upper"
    index: int
    residual: float
    name: Hashable = None


def check_feasible(problem: StandardLp, x: np.ndarray, feas_tol: float = 1e-7) -> list[Violation]:
    """List every row or bound that ``x`` violates by more than ``feas_tol``.

    Residuals are ``row·x - rhs`` for rows, ``lower - x`` / ``x - upper`` for bounds.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.num_vars,):
        raise LpStructureError(f"x has shape {x.shape}, expected ({problem.num_vars},)")
    eq_names, ub_names = problem.row_names or ((), ())
    out: list[Violation] = []
    for i, row in enumerate(problem.eq_rows):
        res = row.dot(x) - row.rhs
        if abs(res) > feas_tol:
            out.append(Violation("eq", i, res, eq_names[i] if eq_names else None))
    for i, row in enumerate(problem.ub_rows):
        res = row.dot(x) - row.rhs
        if res > feas_tol:
            out.append(Violation("ub", i, res, ub_names[i] if ub_names else None))
    names = {v: k for k, v in problem.var_names.items()}
    for j in np.flatnonzero(problem.lower - x > feas_tol):
        out.append(Violation("lower", int(j), float(problem.lower[j] - x[j]), names.get(int(j))))
    for j in np.flatnonzero(x - problem.upper > feas_tol):
        out.append(Violation("upper", int(j), float(x[j] - problem.upper[j]), names.get(int(j))))
    return out


def dump_lp(problem: StandardLp) -> str:
    """Fixed-format plain-text listing, stable enough for golden-file comparisons."""
    names = {v: k for k, v in problem.var_names.items()}

    def label(j: int) -> str:
        key = names.get(j)
        if key is None:
            return f"x{j}"
        if isinstance(key, tuple):
            return ":".join(str(k) for k in key)
        return str(key)

    def fmt_row(row: Row) -> str:
        order = np.argsort(row.cols, kind="stable")
        return " ".join(f"{row.coefs[k]:+.12g}*{label(int(row.cols[k]))}" for k in order)

    lines = [f"VARS {problem.num_vars}", f"OFFSET {problem.objective_offset:.12g}", "OBJECTIVE"]
    for j in range(problem.num_vars):
        if problem.objective[j] != 0.0:
            lines.append(f"  {label(j)} {problem.objective[j]:+.12g}")
    lines.append(f"EQ {len(problem.eq_rows)}")
    for i, row in enumerate(problem.eq_rows):
        lines.append(f"  e{i}: {fmt_row(row)} = {row.rhs:.12g}")
    lines.append(f"UB {len(problem.ub_rows)}")
    for i, row in enumerate(problem.ub_rows):
        lines.append(f"  u{i}: {fmt_row(row)} <= {row.rhs:.12g}")
    lines.append("BOUNDS")
    for j in range(problem.num_vars):
        lines.append(f"  {problem.lower[j]:.12g} <= {label(j)} <= {problem.upper[j]:.12g}")
    return "\n".join(lines) + "\n"
