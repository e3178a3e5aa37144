"""Compile the three community cost-minimization problems into LPs and decode their solutions.

Column keys in the LP name registry are ``(household_id, kind, slot)`` with kind one of

    b    grid purchase                   >= 0
    rp   storage charge (r+)             in [0, rho]
    rm   storage discharge (r-)          in [0, rho]
    s    state of charge at slot end     in [0, C]
    ap   energy given to the community   >= 0
    am   energy taken from the community >= 0
    a    consumer exchange (<= 0)        in [-u, 0]

Net storage flow is ``r = rp - rm`` and member exchange is ``a = ap - am``.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lp import FEAS_TOL, LpBuilder, LpSolution, StandardLp, check_feasible, solve_lp
from .model import CostBreakdown, DispatchSolution, Household, HouseholdDispatch, Scenario


class DomainError(ValueError):
    """A problem was requested for households that cannot take part in it."""


class DispatchError(RuntimeError):
    """A solve did not end Optimal, or its decoded dispatch failed the audit."""

    def __init__(self, message: str, status=None):
        super().__init__(message)
        self.status = status


class Method(str, enum.Enum):
    INDIVIDUAL = "individual"
    COALITIONAL = "coalitional"
    COMMUNITY = "community"


@dataclass(frozen=True)
class ProblemKind:
    method: Method
    members: tuple[str, ...]
    consumers: tuple[str, ...] = ()

    @classmethod
    def individual(cls, member: str) -> ProblemKind:
        return cls(Method.INDIVIDUAL, (member,))

    @classmethod
    def coalitional(cls, members: Iterable[str]) -> ProblemKind:
        return cls(Method.COALITIONAL, tuple(members))

    @classmethod
    def community(cls, members: Iterable[str], consumers: Iterable[str]) -> ProblemKind:
        return cls(Method.COMMUNITY, tuple(members), tuple(consumers))

    def label(self) -> str:
        return f"{self.method.value}[{','.join(self.members)}]"


def _members(s: Scenario, ids: Sequence[str]) -> list[Household]:
    if not ids:
        raise DomainError("member subset must be nonempty")
    if len(set(ids)) != len(ids):
        raise DomainError(f"member subset has duplicates: {list(ids)}")
    by_id = {h.id: h for h in s.members}
    out = []
    for hid in ids:
        if hid not in by_id:
            raise DomainError(f"{hid!r} is not a renewable/storage owner in this scenario")
        out.append(by_id[hid])
    return out


def _add_member(lp: LpBuilder, s: Scenario, h: Household, exchange: bool) -> None:
    """Columns and per-slot rows for one storage-owning member.

    Objective per slot: xi*b + pi*(rp+rm) [+ tau*(ap+am)] plus the waste penalty
    sigma*(b + w - u - a - r), whose constant part goes to the offset.
    """
    T = s.grid.T
    xi = s.tariff.grid_price
    pi = s.prices.storage_cycle_price
    sigma = s.prices.waste_penalty_price
    tau = s.prices.transfer_price
    st = h.storage
    u, w = h.demand_kwh, h.renewable_kwh
    lp.offset += sigma * float(np.sum(w - u))
    keep = 1.0 - st.leakage
    for t in range(T):
        b = lp.add_var((h.id, "b", t), 0.0, np.inf, xi[t] + sigma)
        rp = lp.add_var((h.id, "rp", t), 0.0, st.rate_kwh, pi - sigma)
        rm = lp.add_var((h.id, "rm", t), 0.0, st.rate_kwh, pi + sigma)
        sv = lp.add_var((h.id, "s", t), 0.0, st.capacity_kwh, 0.0)
        # demand: u - w - b + r (+ a) <= 0
        terms = [(b, -1.0), (rp, 1.0), (rm, -1.0)]
        if exchange:
            ap = lp.add_var((h.id, "ap", t), 0.0, np.inf, tau - sigma)
            am = lp.add_var((h.id, "am", t), 0.0, np.inf, tau + sigma)
            terms += [(ap, 1.0), (am, -1.0)]
        lp.add_ub(terms, float(w[t] - u[t]), name=(h.id, "demand", t))
        # storage recurrence: s(t) - (1-eta) s(t-1) - r(t) = 0
        rec = [(sv, 1.0), (rp, -1.0), (rm, 1.0)]
        if t == 0:
            lp.add_eq(rec, keep * st.initial_kwh, name=(h.id, "storage", t))
        else:
            rec.append((lp.var((h.id, "s", t - 1)), -keep))
            lp.add_eq(rec, 0.0, name=(h.id, "storage", t))


def build_individual(s: Scenario, member: str) -> StandardLp:
    (h,) = _members(s, [member])
    lp = LpBuilder()
    _add_member(lp, s, h, exchange=False)
    return lp.build()


def build_coalitional(s: Scenario, group: Sequence[str]) -> StandardLp:
    hs = _members(s, group)
    lp = LpBuilder()
    for h in hs:
        _add_member(lp, s, h, exchange=True)
    for t in range(s.grid.T):
        terms = []
        for h in hs:
            terms += [(lp.var((h.id, "ap", t)), 1.0), (lp.var((h.id, "am", t)), -1.0)]
        lp.add_eq(terms, 0.0, name=("balance", t))
    return lp.build()


def build_community(s: Scenario, group: Sequence[str]) -> StandardLp:
    """Coalition ``group`` plus every consumer of the scenario.

    The objective is the members' joint cost net of sales to consumers; each
    consumer keeps a bill no higher than the utility-only baseline minus the
    margin delta.
    """
    hs = _members(s, group)
    consumers = s.consumers
    if not consumers:
        raise DomainError("scenario has no consumers; use build_coalitional")
    T = s.grid.T
    xi = s.tariff.grid_price
    lam = s.tariff.community_price
    tau = s.prices.transfer_price
    lp = LpBuilder()
    for h in hs:
        _add_member(lp, s, h, exchange=True)
    for p in consumers:
        u = p.demand_kwh
        bill = []
        for t in range(T):
            b = lp.add_var((p.id, "b", t), 0.0, np.inf, 0.0)
            # -a is energy bought at lambda, which is the members' revenue
            a = lp.add_var((p.id, "a", t), -float(u[t]), 0.0, float(lam[t]))
            lp.add_eq([(b, -1.0), (a, 1.0)], -float(u[t]), name=(p.id, "demand", t))
            bill += [(b, float(xi[t])), (a, -(tau + float(lam[t])))]
        lp.add_ub(bill, float(np.dot(u, xi)) - s.prices.consumer_margin, name=(p.id, "protection"))
    for t in range(T):
        terms = []
        for h in hs:
            terms += [(lp.var((h.id, "ap", t)), 1.0), (lp.var((h.id, "am", t)), -1.0)]
        terms += [(lp.var((p.id, "a", t)), 1.0) for p in consumers]
        lp.add_eq(terms, 0.0, name=("balance", t))
    return lp.build()


def build(s: Scenario, kind: ProblemKind) -> StandardLp:
    if kind.method is Method.INDIVIDUAL:
        if len(kind.members) != 1:
            raise DomainError("an individual problem has exactly one member")
        return build_individual(s, kind.members[0])
    if kind.method is Method.COALITIONAL:
        return build_coalitional(s, kind.members)
    if tuple(kind.consumers) != tuple(h.id for h in s.consumers):
        raise DomainError("community problems include every consumer of the scenario")
    return build_community(s, kind.members)


def decode(
    s: Scenario, kind: ProblemKind, lp: StandardLp, sol: LpSolution, feas_tol: float = FEAS_TOL
) -> DispatchSolution:
    """Rebuild per-household vectors and itemized costs from an optimal LP point."""
    if not sol.optimal:
        raise DispatchError(f"{kind.label()}: solver status {sol.status.value}", sol.status)
    violations = check_feasible(lp, sol.x, feas_tol)
    if violations:
        raise DispatchError(f"{kind.label()}: solution fails audit: {violations[:5]}")
    x = sol.x
    T = s.grid.T
    slots = range(T)
    xi = s.tariff.grid_price
    lam = s.tariff.community_price
    pr = s.prices

    def vec(hid: str, name: str) -> np.ndarray:
        return np.array([x[lp.index((hid, name, t))] for t in slots])

    exchange = kind.method is not Method.INDIVIDUAL
    raw = {}
    for h in _members(s, kind.members):
        b = vec(h.id, "b")
        r = vec(h.id, "rp") - vec(h.id, "rm")
        a = vec(h.id, "ap") - vec(h.id, "am") if exchange else np.zeros(T)
        raw[h.id] = (h, b, r, vec(h.id, "s"), a)

    out: dict[str, HouseholdDispatch] = {}
    consumer_costs = []
    sold = np.zeros(T)
    if kind.method is Method.COMMUNITY:
        for p in s.consumers:
            b = vec(p.id, "b")
            a = vec(p.id, "a")
            bought = -a
            sold += bought
            cost = CostBreakdown(
                grid_cost=float(xi @ b),
                operation_cost=pr.transfer_price * float(np.sum(np.abs(a))),
                purchase_cost=float(lam @ bought),
            )
            consumer_costs.append(cost)
            out[p.id] = HouseholdDispatch(b, np.zeros(T), np.zeros(T), a, cost)

    # revenue from consumers is shared per slot in proportion to what each member gave
    givers = np.array([np.maximum(raw[hid][4], 0.0) for hid in raw]).reshape(len(raw), T)
    given = givers.sum(axis=0)
    share = np.divide(givers, given, out=np.zeros_like(givers), where=given > 0)
    revenue = share * (lam * sold)

    member_costs = []
    for k, (hid, (h, b, r, sv, a)) in enumerate(raw.items()):
        cost = CostBreakdown(
            grid_cost=float(xi @ b),
            storage_cost=pr.storage_cycle_price * float(np.sum(np.abs(r))),
            operation_cost=pr.transfer_price * float(np.sum(np.abs(a))),
            purchase_revenue=float(revenue[k].sum()),
            penalty_charge=pr.waste_penalty_price * float(np.sum(b + h.renewable_kwh - h.demand_kwh - a - r)),
        )
        member_costs.append(cost)
        out[hid] = HouseholdDispatch(b, r, sv, a, cost)

    return DispatchSolution(
        problem=kind,
        households=out,
        aggregate=CostBreakdown.sum(member_costs),
        consumer_aggregate=CostBreakdown.sum(consumer_costs),
        lp_objective=float(sol.objective_value),
        iterations=sol.iterations,
    )


def solve_dispatch(s: Scenario, kind: ProblemKind, feas_tol: float = FEAS_TOL) -> DispatchSolution:
    lp = build(s, kind)
    sol = solve_lp(lp, feas_tol=feas_tol)
    return decode(s, kind, lp, sol, feas_tol)


def utility_baseline(s: Scenario) -> dict[str, float]:
    """What each consumer pays buying everything from the utility."""
    xi = s.tariff.grid_price
    return {p.id: float(p.demand_kwh @ xi) for p in s.consumers}


def write_dispatch_csv(sol: DispatchSolution, path: str | Path | None = None) -> str:
    """One row per (household, slot) with b, r, s, a; then one summary row per household."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["household_id", "slot", "b", "r", "s", "a"])
    for hid, hd in sol.households.items():
        for t in range(hd.b.size):
            w.writerow([hid, t, *(repr(float(v[t])) for v in (hd.b, hd.r, hd.s, hd.a))])
    fields = list(CostBreakdown().as_dict())
    w.writerow([])
    w.writerow(["household_id", *fields])
    for hid, hd in sol.households.items():
        d = hd.cost.as_dict()
        w.writerow([hid, *(repr(float(d[f])) for f in fields)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
