"""Scenario factories and the decoded-dispatch audit shared by the test modules."""
from __future__ import annotations

import numpy as np

from coalgrid.data.synth import RosterSpec, synth_scenario
from coalgrid.dispatch import Method, utility_baseline
from coalgrid.model import Household, Kind, PriceParams, Scenario, StorageSpec, Tariff, TimeGrid

AUDIT_TOL = 1e-7


def member(hid, demand, renewable=None, capacity=5.0, rate=5.0, leakage=0.0, initial=0.0, kind=None):
    demand = np.atleast_1d(np.asarray(demand, dtype=float))
    renewable = np.zeros_like(demand) if renewable is None else np.atleast_1d(np.asarray(renewable, dtype=float))
    if kind is None:
        kind = Kind.PROSUMER if np.any(renewable) else Kind.STORAGE_OWNER
    return Household(hid, kind, demand, renewable, StorageSpec(capacity, rate, leakage, initial))


def consumer(hid, demand):
    demand = np.atleast_1d(np.asarray(demand, dtype=float))
    return Household(hid, Kind.CONSUMER, demand, np.zeros_like(demand))


def scenario(households, price, alpha=0.9, pi=0.0, sigma=0.0, tau=0.0, delta=0.0):
    price = np.atleast_1d(np.asarray(price, dtype=float))
    return Scenario(TimeGrid(price.size), tuple(households), Tariff(price, alpha), PriceParams(pi, sigma, tau, delta))


def small_roster(seed: int, max_members: int = 4, max_consumers: int = 2, days: int = 1) -> RosterSpec:
    """A varied community with at least one prosumer and one consumer."""
    rng = np.random.default_rng([seed, 99])
    n_m = int(rng.integers(1, max_members + 1))
    n_p = int(rng.integers(1, max_consumers + 1))
    n_pro = int(rng.integers(1, n_m + 1))
    kinds = (Kind.PROSUMER,) * n_pro + (Kind.STORAGE_OWNER,) * (n_m - n_pro) + (Kind.CONSUMER,) * n_p
    ids = tuple(f"m{i + 1}" for i in range(n_m)) + tuple(f"p{i + 1}" for i in range(n_p))
    inhabitants = tuple(int(k) for k in rng.integers(1, 6, size=len(ids)))
    return RosterSpec(ids=ids, kinds=kinds, inhabitants=inhabitants, days=days)


def small_scenario(seed: int, **kw) -> Scenario:
    return synth_scenario(seed, small_roster(seed, **kw))[0]


def four_member_roster(days: int = 1) -> RosterSpec:
    return RosterSpec(
        ids=("m1", "m2", "m3", "m4", "p1", "p2"),
        kinds=(Kind.PROSUMER, Kind.PROSUMER, Kind.STORAGE_OWNER, Kind.STORAGE_OWNER, Kind.CONSUMER, Kind.CONSUMER),
        inhabitants=(3, 4, 2, 5, 3, 4),
        days=days,
    )


def audit_dispatch(s: Scenario, sol) -> dict[str, float]:
    """Largest residual per constraint family, recomputed from the decoded vectors.

    Every value is a violation measure: 0 means satisfied exactly.
    """
    kind = sol.problem
    res = {"recurrence": 0.0, "bounds": 0.0, "sign": 0.0, "surplus": 0.0, "balance": 0.0, "protection": 0.0}

    def bump(key, value):
        res[key] = max(res[key], float(value))

    balance = np.zeros(s.grid.T)
    for hid in kind.members:
        h = s.household(hid)
        hd = sol.households[hid]
        st = h.storage
        prev = np.concatenate([[st.initial_kwh], hd.s[:-1]])
        bump("recurrence", np.max(np.abs(hd.s - (1 - st.leakage) * prev - hd.r)))
        bump("bounds", np.max(np.maximum(-hd.s, hd.s - st.capacity_kwh)))
        bump("bounds", np.max(np.abs(hd.r)) - st.rate_kwh)
        bump("sign", np.max(-hd.b))
        bump("surplus", np.max(-(hd.b + h.renewable_kwh - h.demand_kwh - hd.a - hd.r)))
        balance += hd.a
    if kind.method is Method.COMMUNITY:
        base = utility_baseline(s)
        for p in s.consumers:
            hd = sol.households[p.id]
            bump("sign", np.max(hd.a))
            bump("sign", np.max(-hd.b))
            bump("surplus", np.max(np.abs(p.demand_kwh - hd.b + hd.a)))
            bump("protection", hd.cost.total - (base[p.id] - s.prices.consumer_margin))
            balance += hd.a
    if kind.method is not Method.INDIVIDUAL:
        bump("balance", np.max(np.abs(balance)))
    return res


def assert_audit(s: Scenario, sol, tol: float = AUDIT_TOL) -> None:
    worst = audit_dispatch(s, sol)
    bad = {k: v for k, v in worst.items() if v > tol}
    assert not bad, f"{sol.problem.label()}: residuals above {tol}: {bad}"
