"""Acceptance gate: one test per primary criterion, each printing a PASS/FAIL line."""
import itertools
import time

import numpy as np
import pytest

from coalgrid.data import load_bundled, wind_power_kwh
from coalgrid.data.synth import RosterSpec, synth_scenario
from coalgrid.dispatch import Method, ProblemKind, build, solve_dispatch, utility_baseline
from coalgrid.game import build_coalition_table, shapley
from coalgrid.horizon import run_horizon, sweep_alpha
from coalgrid.lp import Status, check_feasible, solve_lp
from coalgrid.model import Kind, PriceParams
from oracles import shapley_by_orders, vertex_enumeration, wind_kwh_by_hand
from support import audit_dispatch, four_member_roster, member, scenario, small_roster
from test_lp import lp_from_dense, random_lp

pytestmark = pytest.mark.acceptance


def community(s):
    return ProblemKind.community(s.member_ids, [p.id for p in s.consumers])


def test_lp_oracle(criterion):
    with criterion("LP oracle: 200 random LPs match vertex enumeration within 1e-6 in < 10 s") as c:
        rng = np.random.default_rng(2024)
        problems = [random_lp(rng) for _ in range(200)]
        worst = 0.0
        start = time.perf_counter()
        solved = []
        for data in problems:
            lp = lp_from_dense(*data)
            solved.append((lp, solve_lp(lp)))
        elapsed = time.perf_counter() - start
        for data, (lp, sol) in zip(problems, solved):
            best, _ = vertex_enumeration(*data)
            if best is None:
                c.check(sol.status is Status.INFEASIBLE, f"solver says {sol.status.value}, oracle infeasible")
                continue
            c.check(sol.optimal, f"solver says {sol.status.value}, oracle {best:.6g}")
            if sol.optimal:
                worst = max(worst, abs(sol.objective_value - best))
                c.check(check_feasible(lp, sol.x) == [], "audit failed")
        c.check(worst <= 1e-6, f"max objective gap {worst:.2e}")
        c.check(elapsed < 10, f"solver time {elapsed:.2f} s")
        c.note(f"max gap {worst:.1e}, solver time {elapsed:.2f} s")


def test_constraint_audit(criterion, audit_every_dispatch):
    with criterion("Constraint audit: residuals <= 1e-7 on every solved instance") as c:
        h = load_bundled()
        worst: dict[str, float] = {}
        count = 0
        scenarios = [h.day_scenario(d) for d in (0, 10, 20, 30)]
        scenarios += [synth_scenario(seed, small_roster(seed))[0] for seed in range(8)]
        for s in scenarios:
            kinds = [ProblemKind.individual(m) for m in s.member_ids]
            kinds += [ProblemKind.coalitional(s.member_ids), community(s)]
            for kind in kinds:
                lp = build(s, kind)
                sol = solve_lp(lp)
                c.check(sol.optimal, f"{kind.label()} {sol.status.value}")
                c.check(check_feasible(lp, sol.x) == [], f"{kind.label()} LP audit")
                dsol = solve_dispatch(s, kind)
                for key, value in audit_dispatch(s, dsol).items():
                    worst[key] = max(worst.get(key, 0.0), value)
                count += 1
        for key, value in worst.items():
            c.check(value <= 1e-7, f"{key} residual {value:.2e}")
        c.note(
            f"{count} instances here, {audit_every_dispatch['count']} audited in this session; "
            + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
        )


def test_dominance_chain(criterion):
    with criterion("Dominance chain: 20 scenarios, M <= 4, P <= 2, within 1e-6 in < 60 s") as c:
        start = time.perf_counter()
        worst_coal = worst_comm = -np.inf
        for seed in range(20):
            s = synth_scenario(seed, small_roster(seed))[0]
            assert len(s.members) <= 4 and len(s.consumers) <= 2 and s.grid.T == 24
            indiv = sum(solve_dispatch(s, ProblemKind.individual(m)).lp_objective for m in s.member_ids)
            coal = solve_dispatch(s, ProblemKind.coalitional(s.member_ids)).lp_objective
            comm = solve_dispatch(s, community(s)).lp_objective
            worst_coal = max(worst_coal, coal - indiv)
            worst_comm = max(worst_comm, comm - coal)
            c.check(coal <= indiv + 1e-6, f"seed {seed}: coalitional {coal:.6f} > individual {indiv:.6f}")
            c.check(comm <= coal + 1e-6, f"seed {seed}: community {comm:.6f} > coalitional {coal:.6f}")
        elapsed = time.perf_counter() - start
        c.check(elapsed < 60, f"runtime {elapsed:.1f} s")
        c.note(f"max coal-indiv {worst_coal:.2e}, max comm-coal {worst_comm:.2e}, {elapsed:.1f} s")


def test_game_axioms(criterion):
    with criterion("Game axioms: singleton, superadditivity, efficiency, symmetry, dummy, permutation oracle") as c:
        tables = []
        for seed in (0, 3, 5):
            _, h = synth_scenario(seed, four_member_roster(days=2))
            for d in range(2):
                tables.append(build_coalition_table(h.day_scenario(d), ["coalitional", "community"]))
        worst_single = worst_super = worst_eff = worst_perm = 0.0
        for t in tables:
            v = t.worths(Method.COALITIONAL)
            worst_single = max(worst_single, max(abs(v[1 << i]) for i in range(4)))
            for a, b in itertools.product(range(1, 16), repeat=2):
                if a & b == 0:
                    worst_super = max(worst_super, v[a] + v[b] - v[a | b])
            for variant in t.variants:
                alloc = shapley(t, variant)
                worst_eff = max(worst_eff, alloc.efficiency_gap() / (1 + abs(alloc.grand_worth)))
                w = t.worths(variant)
                ref = shapley_by_orders(range(4), lambda g: w[sum(1 << i for i in g)])
                worst_perm = max(worst_perm, max(abs(alloc.payoffs[m] - ref[i]) for i, m in enumerate(t.members)))
        c.check(worst_single <= 2e-7, f"singleton |v| {worst_single:.2e}")
        c.check(worst_super <= 1e-6, f"superadditivity shortfall {worst_super:.2e}")
        c.check(worst_eff <= 1e-9, f"efficiency gap {worst_eff:.2e}")

        # five members for the permutation oracle
        roster = RosterSpec(
            ids=("m1", "m2", "m3", "m4", "m5", "p1"),
            kinds=(Kind.PROSUMER, Kind.PROSUMER, Kind.STORAGE_OWNER, Kind.STORAGE_OWNER, Kind.STORAGE_OWNER, Kind.CONSUMER),
            inhabitants=(2, 5, 3, 4, 1, 3),
            days=1,
        )
        t5 = build_coalition_table(synth_scenario(9, roster)[0])
        w5 = t5.worths()
        ref5 = shapley_by_orders(range(5), lambda g: w5[sum(1 << i for i in g)])
        alloc5 = shapley(t5)
        worst_perm = max(worst_perm, max(abs(alloc5.payoffs[m] - ref5[i]) for i, m in enumerate(t5.members)))
        c.check(worst_perm <= 1e-9, f"permutation oracle gap {worst_perm:.2e}")

        twin = dict(demand=[1.0, 0.2, 1.5, 0.8], renewable=[0.0, 2.0, 0.0, 0.5], capacity=2.0, rate=1.0)
        s = scenario(
            [member("a", **twin), member("b", **twin), member("c", [0.5, 1.0, 2.0, 1.0], capacity=1.0),
             member("z", [0, 0, 0, 0], capacity=0.0)],
            [0.3, 0.1, 0.5, 0.2],
            pi=0.0001, sigma=0.001, tau=0.0001,
        )
        alloc = shapley(build_coalition_table(s))
        sym = abs(alloc.payoffs["a"] - alloc.payoffs["b"])
        c.check(sym <= 1e-6, f"symmetry gap {sym:.2e}")
        c.check(abs(alloc.payoffs["z"]) <= 1e-6, f"dummy payoff {alloc.payoffs['z']:.2e}")
        c.note(
            f"singleton {worst_single:.1e}, superadditivity shortfall {worst_super:.1e}, "
            f"efficiency {worst_eff:.1e}, permutation {worst_perm:.1e}, symmetry {sym:.1e}"
        )


def test_consumer_protection(criterion):
    with criterion("Consumer protection: decoded consumer cost <= baseline - delta + 1e-7; delta = 0 fallback feasible") as c:
        h = load_bundled()
        worst = -np.inf
        cases = [h.day_scenario(d) for d in range(0, 31, 3)]
        cases += [synth_scenario(seed, small_roster(seed))[0] for seed in range(10)]
        cases += [s.replace(prices=PriceParams(0.0001, 0.001, 0.0001, 0.003)) for s in cases[:4]]
        for s in cases:
            sol = solve_dispatch(s, community(s))
            base = utility_baseline(s)
            for p in s.consumers:
                excess = sol.households[p.id].cost.total - (base[p.id] - s.prices.consumer_margin)
                worst = max(worst, excess)
                c.check(excess <= 1e-7, f"{p.id} pays {excess:.2e} above the cap")
        # fallback: no exchange, everyone buys their deficit
        for s in cases[:6]:
            if s.prices.consumer_margin:
                continue
            lp = build(s, community(s))
            x = np.zeros(lp.num_vars)
            for hh in s.members:
                keep = 1 - hh.storage.leakage
                for t in range(24):
                    x[lp.index((hh.id, "b", t))] = max(hh.demand_kwh[t] - hh.renewable_kwh[t], 0.0)
                    x[lp.index((hh.id, "s", t))] = keep ** (t + 1) * hh.storage.initial_kwh
            for p in s.consumers:
                for t in range(24):
                    x[lp.index((p.id, "b", t))] = p.demand_kwh[t]
            c.check(check_feasible(lp, x) == [], "zero-exchange point infeasible with delta = 0")
        c.note(f"{len(cases)} community solves, worst margin use {worst:.2e}")


@pytest.mark.slow
def test_directional_reproduction(criterion):
    name = "Directional reproduction: 31 days, 9 households, daily 63-coalition Shapley tables, < 15 min"
    with criterion(name) as c:
        start = time.perf_counter()
        h = load_bundled()
        s = h.base
        c.check(len(s.households) == 9 and len(s.members) == 6, "roster size")
        st = s.members[0].storage
        c.check((st.capacity_kwh, st.rate_kwh, st.leakage) == (5.0, 2.0, 0.001), "storage parameters")
        pr = s.prices
        c.check(
            (pr.storage_cycle_price, pr.waste_penalty_price, pr.transfer_price, s.tariff.alpha)
            == (0.0001, 0.001, 0.0001, 0.9),
            "price parameters",
        )
        run = run_horizon(h, tuple(Method), enable_shapley=True)
        elapsed = time.perf_counter() - start
        tables = [run.result(d, m).table for d in range(31) for m in (Method.COALITIONAL, Method.COMMUNITY)]
        c.check(all(t is not None and t.size - 1 == 63 for t in tables), "daily tables missing")
        pct = run.savings_summary()
        coal = pct["coalitional_vs_individual_pct"]
        comm = pct["community_vs_individual_pct"]
        cons = pct["consumer_vs_utility_pct"]
        c.check(coal > 0, f"coalitional saves {coal:.2f} %")
        c.check(comm > coal, f"community {comm:.2f} % not above coalitional {coal:.2f} %")
        c.check(cons >= 0, f"consumer savings {cons:.2f} %")
        c.check(elapsed < 900, f"runtime {elapsed:.0f} s")
        losing = [d + 1 for d in range(31) if run.result(d, Method.COALITIONAL).worth < 0]
        c.note(
            f"coalitional {coal:.1f} % (reference 13.5 %), community {comm:.1f} % (reference 20 %), "
            f"consumers {cons:.1f} % (reference 4-5 %), days with negative coalitional worth {losing}, "
            f"{elapsed:.0f} s"
        )


def test_alpha_sweep_sanity(criterion):
    with criterion("Alpha sweep: consumer savings >= 0 and sales revenue = purchase cost within 1e-9") as c:
        points = sweep_alpha(load_bundled(), [round(0.1 * k, 1) for k in range(1, 10)])
        for p in points:
            c.check(p.consumer_savings >= 0, f"alpha {p.value}: consumer savings {p.consumer_savings:.3e}")
            gap = abs(p.sales_revenue - p.purchase_cost)
            c.check(gap <= 1e-9, f"alpha {p.value}: revenue gap {gap:.2e}")
        c.note(
            "worth by alpha: "
            + ", ".join(f"{p.value:g}:{p.community_worth:.3f}" for p in points)
        )


def test_wind_model(criterion):
    with criterion("Wind model: hand values at 0, 5, 10 m/s within 1e-9 relative; cubic scaling on 100 speeds") as c:
        for v in (0.0, 5.0, 10.0):
            got, want = wind_power_kwh(v), wind_kwh_by_hand(v)
            c.check(abs(got - want) <= 1e-9 * abs(want), f"v={v}: {got} vs {want}")
        c.check(wind_power_kwh(0.0) == 0.0, "zero speed")
        speeds = np.random.default_rng(1).uniform(0.0, 30.0, 100)
        ratio = wind_power_kwh(2 * speeds) / wind_power_kwh(speeds)
        c.check(np.all(np.abs(ratio - 8) <= 8e-12), "cubic scaling")
        c.note(f"P(10 m/s) = {wind_power_kwh(10.0):.4f} kWh")
