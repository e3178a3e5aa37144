"""Coalitional game among renewable/storage owners and its exact Shapley allocation.

A coalition's worth is what its members save by optimizing jointly instead of
alone. Two bases are kept: ``"objective"`` (default) compares the optimized
objectives, waste penalty included, and is superadditive by construction;
``"monetary"`` compares euros only. Coalitions are bitmasks over the ordered
member list; bit i stands for ``members[i]``.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dispatch import DispatchError, Method, ProblemKind, solve_dispatch
from .lp import FEAS_TOL
from .model import CostBreakdown, Scenario

MAX_MEMBERS = 20
VARIANTS = (Method.COALITIONAL, Method.COMMUNITY)
BASES = ("objective", "monetary")


class TableError(ValueError):
    """Coalition table is incomplete, oversized or asked for a variant it lacks."""


def _variant(v) -> Method:
    m = Method(v)
    if m not in VARIANTS:
        raise ValueError(f"worth variant must be coalitional or community, got {v!r}")
    return m


def members_of(mask: int, members: Sequence[str]) -> tuple[str, ...]:
    return tuple(m for i, m in enumerate(members) if mask >> i & 1)


def _problem(s: Scenario, group: Sequence[str], variant: Method) -> ProblemKind:
    if variant is Method.COALITIONAL:
        return ProblemKind.coalitional(group)
    return ProblemKind.community(group, [p.id for p in s.consumers])


def _cost(c: CostBreakdown, basis: str) -> float:
    return c.total + c.penalty_charge if basis == "objective" else c.total


def _solve_cost(args) -> tuple[CostBreakdown, float]:
    s, kind, feas_tol = args
    try:
        sol = solve_dispatch(s, kind, feas_tol)
    except DispatchError as exc:
        raise DispatchError(f"{kind.label()} failed: {exc}", exc.status) from exc
    return sol.aggregate, sol.lp_objective


def _run(tasks: list, jobs: int) -> list[tuple[CostBreakdown, float]]:
    if jobs <= 1 or len(tasks) < 2:
        return [_solve_cost(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_solve_cost, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def individual_costs(s: Scenario, feas_tol: float = FEAS_TOL, jobs: int = 1) -> dict[str, CostBreakdown]:
    """Cost breakdown of each member optimizing alone."""
    tasks = [(s, ProblemKind.individual(m), feas_tol) for m in s.member_ids]
    return {m: c for m, (c, _) in zip(s.member_ids, _run(tasks, jobs))}


def coalition_worth(
    s: Scenario,
    group: Iterable[str],
    variant=Method.COALITIONAL,
    feas_tol: float = FEAS_TOL,
    individual: Mapping[str, CostBreakdown] | None = None,
    basis: str = "objective",
) -> float:
    """Sum of the members' individual costs minus the coalition's joint cost (EUR)."""
    group = tuple(group)
    variant = _variant(variant)
    _check_basis(basis)
    if individual is None:
        individual = {m: _solve_cost((s, ProblemKind.individual(m), feas_tol))[0] for m in group}
    joint, _ = _solve_cost((s, _problem(s, group, variant), feas_tol))
    return math.fsum(_cost(individual[m], basis) for m in group) - _cost(joint, basis)


def _check_basis(basis: str) -> None:
    if basis not in BASES:
        raise ValueError(f"basis must be one of {BASES}, got {basis!r}")


@dataclass(frozen=True)
class CoalitionTable:
    """Costs for every nonempty coalition, indexed by bitmask (entry 0 is unused)."""

    members: tuple[str, ...]
    individual: tuple[CostBreakdown, ...]  # same order as ``members``
    joint: Mapping[Method, tuple[CostBreakdown | None, ...]]
    lp_objective: Mapping[Method, np.ndarray]

    @property
    def size(self) -> int:
        return 1 << len(self.members)

    @property
    def variants(self) -> tuple[Method, ...]:
        return tuple(self.joint)

    def individual_sum(self, mask: int, basis: str = "objective") -> float:
        return math.fsum(_cost(c, basis) for i, c in enumerate(self.individual) if mask >> i & 1)

    def joint_cost(self, mask: int, variant=None, basis: str = "objective") -> float:
        return _cost(self.joint[self._pick(variant)][mask], basis)

    def worths(self, variant=None, basis: str = "objective") -> np.ndarray:
        """Array over all masks with ``v(empty) = 0``."""
        _check_basis(basis)
        joint = self.joint[self._pick(variant)]
        if len(joint) != self.size or any(c is None for c in joint[1:]):
            raise TableError("coalition table is incomplete")
        v = np.zeros(self.size)
        for mask in range(1, self.size):
            v[mask] = self.individual_sum(mask, basis) - _cost(joint[mask], basis)
        return v

    def worth(self, group: Iterable[str], variant=None, basis: str = "objective") -> float:
        return float(self.worths(variant, basis)[self.mask(group)])

    def mask(self, group: Iterable[str]) -> int:
        idx = {m: i for i, m in enumerate(self.members)}
        mask = 0
        for m in group:
            mask |= 1 << idx[m]
        return mask

    def _pick(self, variant) -> Method:
        if variant is None:
            if len(self.joint) != 1:
                raise TableError(f"table holds {len(self.joint)} variants; name one")
            return next(iter(self.joint))
        variant = _variant(variant)
        if variant not in self.joint:
            raise TableError(f"table has no {variant.value} costs")
        return variant


def build_coalition_table(
    s: Scenario,
    variant=Method.COALITIONAL,
    feas_tol: float = FEAS_TOL,
    individual: Mapping[str, CostBreakdown] | None = None,
    jobs: int = 1,
) -> CoalitionTable:
    """Solve every nonempty sub-coalition of the scenario's members.

    ``variant`` may be one variant or several. ``individual`` overrides the
    stand-alone costs, for horizons where the individual method carries its
    own storage levels.
    """
    variants = [_variant(variant)] if isinstance(variant, (str, Method)) else [_variant(v) for v in variant]
    members = s.member_ids
    M = len(members)
    if M == 0:
        raise TableError("scenario has no renewable/storage owners")
    if M > MAX_MEMBERS:
        raise TableError(
            f"{M} members exceeds the exact-enumeration cap of {MAX_MEMBERS}; "
            "use a sampling estimator instead"
        )
    if Method.COMMUNITY in variants and not s.consumers:
        raise TableError("community variant needs at least one consumer")
    if individual is None:
        individual = individual_costs(s, feas_tol, jobs)
    size = 1 << M
    tasks, slots = [], []
    for v in variants:
        for mask in range(1, size):
            tasks.append((s, _problem(s, members_of(mask, members), v), feas_tol))
            slots.append((v, mask))
    results = _run(tasks, jobs)
    joint: dict[Method, list] = {v: [None] * size for v in variants}
    obj = {v: np.zeros(size) for v in variants}
    for (v, mask), (cost, lp_obj) in zip(slots, results):
        joint[v][mask] = cost
        obj[v][mask] = lp_obj
    return CoalitionTable(
        members,
        tuple(individual[m] for m in members),
        {v: tuple(joint[v]) for v in variants},
        obj,
    )


@dataclass(frozen=True)
class ShapleyAllocation:
    members: tuple[str, ...]
    payoffs: dict[str, float]
    grand_worth: float

    def efficiency_gap(self) -> float:
        return abs(math.fsum(self.payoffs.values()) - self.grand_worth)


def shapley_from_worths(v: Sequence[float], n: int) -> np.ndarray:
    """Exact Shapley values for ``n`` players from a worth array indexed by bitmask."""
    v = np.asarray(v, dtype=float)
    if v.shape != (1 << n,):
        raise TableError(f"worth array has shape {v.shape}, expected ({1 << n},)")
    if np.any(np.isnan(v)):
        raise TableError("worth array has missing coalitions")
    weight = [math.factorial(g) * math.factorial(n - g - 1) / math.factorial(n) for g in range(n)]
    phi = np.empty(n)
    for i in range(n):
        bit = 1 << i
        terms = []
        for mask in range(1 << n):
            if mask & bit:
                continue
            terms.append(weight[mask.bit_count()] * (v[mask | bit] - v[mask]))
        phi[i] = math.fsum(terms)
    return phi


def shapley(table: CoalitionTable, variant=None, basis: str = "objective") -> ShapleyAllocation:
    v = table.worths(variant, basis)
    phi = shapley_from_worths(v, len(table.members))
    return ShapleyAllocation(table.members, dict(zip(table.members, phi.tolist())), float(v[-1]))


# --- CSV ---------------------------------------------------------------------


def write_table_csv(table: CoalitionTable, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["mask", "members", "individual_sum", "individual_sum_monetary"]
    for v in table.variants:
        header += [f"{v.value}_cost", f"{v.value}_cost_monetary", f"{v.value}_worth", f"{v.value}_worth_monetary"]
    w.writerow(header)
    worths = {v: (table.worths(v), table.worths(v, "monetary")) for v in table.variants}
    for mask in range(1, table.size):
        row = [
            mask,
            " ".join(members_of(mask, table.members)),
            repr(float(table.individual_sum(mask))),
            repr(float(table.individual_sum(mask, "monetary"))),
        ]
        for v in table.variants:
            row += [
                repr(float(table.joint_cost(mask, v))),
                repr(float(table.joint_cost(mask, v, "monetary"))),
                repr(float(worths[v][0][mask])),
                repr(float(worths[v][1][mask])),
            ]
        w.writerow(row)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_allocation_csv(alloc: ShapleyAllocation, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["member", "payoff"])
    for m in alloc.members:
        w.writerow([m, repr(float(alloc.payoffs[m]))])
    w.writerow(["grand_coalition", repr(float(alloc.grand_worth))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
