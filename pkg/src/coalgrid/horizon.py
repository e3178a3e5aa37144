"""Rolling day-by-day simulation with per-method storage carry-over, plus alpha and capacity sweeps."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dispatch import DispatchError, Method, ProblemKind, solve_dispatch, utility_baseline
from .game import CoalitionTable, ShapleyAllocation, build_coalition_table, shapley
from .lp import FEAS_TOL
from .model import CostBreakdown, DispatchSolution, HorizonInputs, Scenario

log = logging.getLogger(__name__)

INDEPENDENT = "independent"
SHARED_INIT = "shared-init"
STORAGE_MODES = (INDEPENDENT, SHARED_INIT)


class HorizonError(RuntimeError):
    pass


@dataclass
class DayResult:
    day: int
    method: Method
    initial_storage: dict[str, float]
    terminal_storage: dict[str, float]
    costs: dict[str, CostBreakdown]  # every household taking part
    member_cost: float
    consumer_cost: float
    lp_objective: float
    solutions: list[DispatchSolution]
    worth: float | None = None  # coalitional methods: savings over the individual method
    table: CoalitionTable | None = None
    allocation: ShapleyAllocation | None = None


@dataclass
class HorizonRun:
    inputs: HorizonInputs
    methods: tuple[Method, ...]
    storage_mode: str
    days: list[dict[Method, DayResult]] = field(default_factory=list)

    def result(self, day: int, method) -> DayResult:
        return self.days[day][Method(method)]

    def daily_member_cost(self, method) -> np.ndarray:
        return np.array([d[Method(method)].member_cost for d in self.days])

    def daily_consumer_cost(self, method) -> np.ndarray:
        return np.array([d[Method(method)].consumer_cost for d in self.days])

    def cumulative_member_cost(self, method) -> np.ndarray:
        return np.cumsum(self.daily_member_cost(method))

    def cumulative_costs(self, method) -> dict[str, np.ndarray]:
        """Running cost per household for one method."""
        method = Method(method)
        ids = list(self.days[0][method].costs)
        return {hid: np.cumsum([d[method].costs[hid].total for d in self.days]) for hid in ids}

    def storage_trajectory(self, method) -> dict[str, np.ndarray]:
        """End-of-slot storage level per member, concatenated over days."""
        method = Method(method)
        out: dict[str, list] = {}
        for d in self.days:
            for sol in d[method].solutions:
                for hid in sol.problem.members:
                    out.setdefault(hid, []).append(sol.households[hid].s)
        return {hid: np.concatenate(v) for hid, v in out.items()}

    def consumer_baseline(self) -> np.ndarray:
        return np.array(
            [sum(utility_baseline(self.inputs.day_scenario(d)).values()) for d in range(len(self.days))]
        )

    def savings_summary(self) -> dict[str, float]:
        """Percent savings over the whole run, from monetary totals."""
        out: dict[str, float] = {}
        indiv = self.daily_member_cost(Method.INDIVIDUAL).sum() if Method.INDIVIDUAL in self.methods else None
        for m in (Method.COALITIONAL, Method.COMMUNITY):
            if m in self.methods and indiv:
                out[f"{m.value}_vs_individual_pct"] = 100.0 * (indiv - self.daily_member_cost(m).sum()) / indiv
        if Method.COMMUNITY in self.methods:
            base = self.consumer_baseline().sum()
            if base > 0:
                out["consumer_vs_utility_pct"] = 100.0 * (base - self.daily_consumer_cost(Method.COMMUNITY).sum()) / base
        return out


def _solve_method(s: Scenario, method: Method, feas_tol: float) -> list[DispatchSolution]:
    members = s.member_ids
    if method is Method.INDIVIDUAL:
        return [solve_dispatch(s, ProblemKind.individual(m), feas_tol) for m in members]
    if method is Method.COALITIONAL:
        return [solve_dispatch(s, ProblemKind.coalitional(members), feas_tol)]
    return [solve_dispatch(s, ProblemKind.community(members, [p.id for p in s.consumers]), feas_tol)]


def _day_result(day: int, method: Method, s: Scenario, sols: list[DispatchSolution]) -> DayResult:
    costs: dict[str, CostBreakdown] = {}
    terminal: dict[str, float] = {}
    for sol in sols:
        for hid, hd in sol.households.items():
            costs[hid] = hd.cost
        terminal.update(sol.terminal_storage())
    member_ids = set(s.member_ids)
    return DayResult(
        day=day,
        method=method,
        initial_storage={h.id: h.storage.initial_kwh for h in s.members},
        terminal_storage=terminal,
        costs=costs,
        member_cost=math.fsum(c.total for hid, c in costs.items() if hid in member_ids),
        consumer_cost=math.fsum(c.total for hid, c in costs.items() if hid not in member_ids),
        lp_objective=math.fsum(sol.lp_objective for sol in sols),
        solutions=sols,
    )


def _check_roster(inputs: HorizonInputs) -> None:
    ids = [h.id for h in inputs.base.households]
    T = inputs.base.grid.T
    for d, day in enumerate(inputs.days):
        if sorted(day.demand_kwh) != sorted(ids):
            raise HorizonError(f"day {d + 1}: household roster differs from the base scenario")
        if len(day.grid_price) != T or any(len(v) != T for v in day.demand_kwh.values()):
            raise HorizonError(f"day {d + 1}: profiles must have {T} slots")
        extra = set(day.renewable_kwh) - set(ids)
        if extra:
            raise HorizonError(f"day {d + 1}: renewable profiles for unknown households {sorted(extra)}")


def run_horizon(
    inputs: HorizonInputs,
    methods: Iterable = tuple(Method),
    enable_shapley: bool = False,
    storage_mode: str = INDEPENDENT,
    feas_tol: float = FEAS_TOL,
    jobs: int = 1,
) -> HorizonRun:
    """Solve each day for each method, threading each method's end-of-day storage into its next day.

    In ``shared-init`` mode every method starts each day from the individual
    method's levels, which makes per-day dominance a provable property.
    Coalitional methods also need the individual method, which is added when
    missing.
    """
    if storage_mode not in STORAGE_MODES:
        raise ValueError(f"storage_mode must be one of {STORAGE_MODES}")
    requested = {Method(m) for m in methods}
    if not requested:
        raise ValueError("at least one method is required")
    if Method.COMMUNITY in requested and not inputs.base.consumers:
        raise HorizonError("community method needs at least one consumer")
    order = [m for m in Method if m in requested or (m is Method.INDIVIDUAL and len(requested - {m}) > 0)]
    if storage_mode == SHARED_INIT and Method.INDIVIDUAL not in order:
        order.insert(0, Method.INDIVIDUAL)
    _check_roster(inputs)

    run = HorizonRun(inputs, tuple(order), storage_mode)
    levels = {m: {h.id: h.storage.initial_kwh for h in inputs.base.members} for m in order}
    for d in range(len(inputs.days)):
        today: dict[Method, DayResult] = {}
        for method in order:
            start = levels[Method.INDIVIDUAL] if storage_mode == SHARED_INIT else levels[method]
            s = inputs.day_scenario(d, start)
            try:
                sols = _solve_method(s, method, feas_tol)
            except DispatchError as exc:
                raise HorizonError(f"day {d + 1}, {method.value}: {exc}") from exc
            res = _day_result(d, method, s, sols)
            if method is not Method.INDIVIDUAL:
                indiv = today[Method.INDIVIDUAL]
                res.worth = math.fsum(indiv.costs[m].total for m in s.member_ids) - res.member_cost
                if enable_shapley:
                    res.table, res.allocation = _day_game(s, d, method, indiv, feas_tol, jobs)
            today[method] = res
        for method in order:
            levels[method] = dict(today[method].terminal_storage)
        run.days.append(today)
        log.info("day %d/%d done", d + 1, len(inputs.days))
    return run


def _day_game(s: Scenario, d: int, method: Method, indiv: DayResult, feas_tol: float, jobs: int):
    # worths compare against what the individual method actually paid that day
    own = {m: indiv.costs[m] for m in s.member_ids}
    try:
        table = build_coalition_table(s, method, feas_tol, individual=own, jobs=jobs)
    except DispatchError as exc:
        raise HorizonError(f"day {d + 1}, {method.value} coalition table: {exc}") from exc
    return table, shapley(table)


def day_game(
    run: HorizonRun, day: int, method, feas_tol: float = FEAS_TOL, jobs: int = 1
) -> tuple[CoalitionTable, ShapleyAllocation]:
    """Coalition table and Shapley allocation for one finished day (0-based) of a run."""
    method = Method(method)
    if method is Method.INDIVIDUAL:
        raise ValueError("the individual method has no coalition game")
    res = run.result(day, method)
    if res.table is not None:
        return res.table, res.allocation
    s = run.inputs.day_scenario(day, res.initial_storage)
    res.table, res.allocation = _day_game(s, day, method, run.result(day, Method.INDIVIDUAL), feas_tol, jobs)
    return res.table, res.allocation


# --- sweeps ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    value: float
    individual_cost: float
    coalitional_cost: float | None
    community_cost: float | None
    coalitional_worth: float | None
    community_worth: float | None
    consumer_baseline: float
    consumer_cost: float | None
    sales_revenue: float | None
    purchase_cost: float | None

    @property
    def consumer_savings(self) -> float | None:
        if self.consumer_cost is None:
            return None
        return self.consumer_baseline - self.consumer_cost

    def as_row(self) -> dict[str, float | None]:
        return {
            "value": self.value,
            "individual_cost": self.individual_cost,
            "coalitional_cost": self.coalitional_cost,
            "community_cost": self.community_cost,
            "coalitional_worth": self.coalitional_worth,
            "community_worth": self.community_worth,
            "consumer_baseline": self.consumer_baseline,
            "consumer_cost": self.consumer_cost,
            "consumer_savings": self.consumer_savings,
            "sales_revenue": self.sales_revenue,
            "purchase_cost": self.purchase_cost,
        }


def _point(value: float, run: HorizonRun) -> SweepPoint:
    indiv = float(run.daily_member_cost(Method.INDIVIDUAL).sum())
    coal = float(run.daily_member_cost(Method.COALITIONAL).sum()) if Method.COALITIONAL in run.methods else None
    comm = None
    consumer = revenue = purchase = None
    if Method.COMMUNITY in run.methods:
        comm = float(run.daily_member_cost(Method.COMMUNITY).sum())
        consumer = float(run.daily_consumer_cost(Method.COMMUNITY).sum())
        revenue = math.fsum(d[Method.COMMUNITY].solutions[0].aggregate.purchase_revenue for d in run.days)
        purchase = math.fsum(d[Method.COMMUNITY].solutions[0].consumer_aggregate.purchase_cost for d in run.days)
    return SweepPoint(
        value=value,
        individual_cost=indiv,
        coalitional_cost=coal,
        community_cost=comm,
        coalitional_worth=None if coal is None else indiv - coal,
        community_worth=None if comm is None else indiv - comm,
        consumer_baseline=float(run.consumer_baseline().sum()),
        consumer_cost=consumer,
        sales_revenue=revenue,
        purchase_cost=purchase,
    )


def sweep_alpha(
    inputs: HorizonInputs, alphas: Sequence[float], feas_tol: float = FEAS_TOL, storage_mode: str = INDEPENDENT
) -> list[SweepPoint]:
    """Re-run the community method for each community price ratio alpha."""
    if not alphas:
        raise ValueError("alpha grid is empty")
    if any(not 0 <= a <= 1 for a in alphas):
        raise ValueError("alpha values must lie in [0, 1]")
    out = []
    for a in alphas:
        run = run_horizon(
            inputs.replace_base(inputs.base.with_alpha(a)),
            (Method.INDIVIDUAL, Method.COMMUNITY),
            storage_mode=storage_mode,
            feas_tol=feas_tol,
        )
        out.append(_point(a, run))
    return out


def sweep_capacity(
    inputs: HorizonInputs,
    capacities: Sequence[float],
    feas_tol: float = FEAS_TOL,
    storage_mode: str = INDEPENDENT,
    methods: Iterable = tuple(Method),
) -> list[SweepPoint]:
    """Re-run all methods with every member's storage capacity set to each value (kWh)."""
    if not capacities:
        raise ValueError("capacity grid is empty")
    if any(c < 0 for c in capacities):
        raise ValueError("capacities must be nonnegative")
    out = []
    for c in capacities:
        run = run_horizon(
            inputs.replace_base(inputs.base.with_capacity(c)), methods, storage_mode=storage_mode, feas_tol=feas_tol
        )
        out.append(_point(c, run))
    return out


# --- CSV ------------------------------------------------------------------------


def write_run_log(run: HorizonRun, path: str | Path | None = None) -> str:
    """One row per (day, method, household): daily cost, cumulative cost, Shapley payoff."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["day", "method", "household_id", "daily_cost", "cumulative_cost", "shapley_payoff"])
    for method in run.methods:
        running: dict[str, float] = {}
        for d, today in enumerate(run.days):
            res = today[method]
            for hid, cost in res.costs.items():
                running[hid] = running.get(hid, 0.0) + cost.total
                pay = ""
                if res.allocation is not None and hid in res.allocation.payoffs:
                    pay = repr(float(res.allocation.payoffs[hid]))
                w.writerow([d + 1, method.value, hid, repr(float(cost.total)), repr(float(running[hid])), pay])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_cumulative_csv(run: HorizonRun, path: str | Path | None = None) -> str:
    """Per-day member and consumer totals and their running sums for each method."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["day", "method", "member_cost", "member_cumulative", "consumer_cost", "consumer_cumulative", "worth"])
    for method in run.methods:
        mc = run.daily_member_cost(method)
        cc = run.daily_consumer_cost(method)
        if method is not Method.COMMUNITY:
            cc = run.consumer_baseline()  # consumers outside the community buy from the utility
        for d in range(len(run.days)):
            worth = run.days[d][method].worth
            w.writerow(
                [
                    d + 1,
                    method.value,
                    repr(float(mc[d])),
                    repr(float(mc[: d + 1].sum())),
                    repr(float(cc[d])),
                    repr(float(cc[: d + 1].sum())),
                    "" if worth is None else repr(float(worth)),
                ]
            )
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_sweep_csv(points: Sequence[SweepPoint], name: str, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rows = [p.as_row() for p in points]
    header = [name if k == "value" else k for k in rows[0]]
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else repr(float(v)) for v in r.values()])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
