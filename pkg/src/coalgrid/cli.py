"""Command-line entry point: ``coalgrid run | sweep | shapley``.

Exit codes: 0 success, 2 usage error, 3 input/ingestion error, 4 solver or audit failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import IngestionError, RosterSpec, load_bundled, synth_scenario
from .dispatch import DispatchError, DomainError, Method, write_dispatch_csv
from .game import TableError, default_jobs, write_allocation_csv, write_table_csv
from .horizon import (
    INDEPENDENT,
    STORAGE_MODES,
    HorizonError,
    HorizonRun,
    day_game,
    run_horizon,
    sweep_alpha,
    sweep_capacity,
    write_cumulative_csv,
    write_run_log,
    write_sweep_csv,
)
from .lp import FEAS_TOL, SolverStalled
from .model import HorizonInputs, check_scenario, load_horizon

log = logging.getLogger("coalgrid")

EXIT_USAGE, EXIT_INPUT, EXIT_SOLVE = 2, 3, 4
OUT_ENV = "COALGRID_OUT"
DUMMY_TOL = 1e-6


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: Path | None = None
    synth_seed: int | None = None
    methods: tuple[Method, ...] = tuple(Method)
    days: int | None = None
    alpha: float | None = None
    delta: float | None = None
    feas_tol: float = FEAS_TOL
    out: Path = Path("coalgrid-out")
    shapley: bool = False
    storage_mode: str = INDEPENDENT
    jobs: int = 1

    def check(self) -> None:
        if self.scenario is not None and self.synth_seed is not None:
            raise UsageError("--scenario and --synth-seed are mutually exclusive")
        if self.alpha is not None:
            if Method.COMMUNITY not in self.methods:
                raise UsageError("--alpha only applies to the community method")
            if not 0 <= self.alpha <= 1:
                raise UsageError("--alpha must lie in [0, 1]")
        if self.delta is not None and self.delta < 0:
            raise UsageError("--delta must be >= 0")
        if self.feas_tol <= 0:
            raise UsageError("--feas-tol must be positive")
        if self.days is not None and self.days < 1:
            raise UsageError("--days must be >= 1")
        if self.storage_mode not in STORAGE_MODES:
            raise UsageError(f"--storage-mode must be one of {STORAGE_MODES}")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")


def parse_methods(text: str) -> tuple[Method, ...]:
    if text == "all":
        return tuple(Method)
    try:
        chosen = {Method(t.strip()) for t in text.split(",") if t.strip()}
    except ValueError as exc:
        raise UsageError(f"unknown method in {text!r}; choose from all, individual, coalitional, community") from exc
    if not chosen:
        raise UsageError("--methods is empty")
    return tuple(m for m in Method if m in chosen)


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma list."""
    text = text.strip()
    if not text:
        raise UsageError("grid is empty")
    if ":" in text:
        try:
            start, stop, step = (float(p) for p in text.split(":"))
        except ValueError as exc:
            raise UsageError(f"bad grid {text!r}; use start:stop:step") from exc
        if step <= 0 or stop < start:
            raise UsageError(f"bad grid {text!r}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    try:
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}") from exc
    if not values:
        raise UsageError("grid is empty")
    return values


def load_inputs(cfg: RunConfig) -> HorizonInputs:
    if cfg.scenario is not None:
        try:
            inputs = load_horizon(cfg.scenario)
        except (OSError, ValueError) as exc:
            raise IngestionError(cfg.scenario, None, str(exc)) from exc
    elif cfg.synth_seed is not None:
        _, inputs = synth_scenario(cfg.synth_seed, RosterSpec())
    else:
        inputs = load_bundled()
    base = inputs.base
    if cfg.alpha is not None:
        base = base.with_alpha(cfg.alpha)
    if cfg.delta is not None:
        base = base.replace(prices=dataclasses.replace(base.prices, consumer_margin=cfg.delta))
    inputs = inputs.replace_base(base)
    try:
        for d in range(len(inputs.days)):
            check_scenario(inputs.day_scenario(d))
    except ValueError as exc:
        raise IngestionError(cfg.scenario or "<generated>", None, f"day {d + 1}: {exc}") from exc
    if cfg.days is not None:
        try:
            inputs = inputs.truncated(cfg.days)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return inputs


def _summary(run: HorizonRun) -> str:
    lines = [f"days: {len(run.days)}  storage mode: {run.storage_mode}"]
    for m in run.methods:
        lines.append(f"{m.value:>12}: members {run.daily_member_cost(m).sum():10.4f} EUR")
    if Method.COMMUNITY in run.methods:
        base = run.consumer_baseline().sum()
        paid = run.daily_consumer_cost(Method.COMMUNITY).sum()
        lines.append(f"   consumers: {paid:10.4f} EUR (utility only: {base:.4f} EUR)")
    for key, pct in run.savings_summary().items():
        lines.append(f"{key}: {pct:.2f} %")
    losing = {
        m.value: [d + 1 for d, day in enumerate(run.days) if day[m].worth is not None and day[m].worth < 0]
        for m in run.methods
        if m is not Method.INDIVIDUAL
    }
    for name, days in losing.items():
        if days:
            lines.append(f"{name}: coalition cost exceeded individual cost on days {days}")
    return "\n".join(lines) + "\n"


def cmd_run(cfg: RunConfig) -> int:
    inputs = load_inputs(cfg)
    run = run_horizon(inputs, cfg.methods, cfg.shapley, cfg.storage_mode, cfg.feas_tol, cfg.jobs)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    write_run_log(run, out / "run_log.csv")
    write_cumulative_csv(run, out / "cumulative.csv")
    for m in run.methods:
        for sol in run.days[-1][m].solutions:
            tag = sol.problem.members[0] if m is Method.INDIVIDUAL else "all"
            write_dispatch_csv(sol, out / f"dispatch_last_day_{m.value}_{tag}.csv")
    ok = True
    if cfg.shapley:
        for m in run.methods:
            for d, day in enumerate(run.days):
                res = day[m]
                if res.allocation is None:
                    continue
                write_allocation_csv(res.allocation, out / f"shapley_{m.value}_day{d + 1:02d}.csv")
                gap = res.allocation.efficiency_gap()
                if gap > 1e-9 * (1 + abs(res.allocation.grand_worth)):
                    ok = False
                    print(f"efficiency check FAILED on day {d + 1} ({m.value}): gap {gap:.3e}", file=sys.stderr)
    text = _summary(run)
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    print(f"artifacts written to {out}")
    return 0 if ok else EXIT_SOLVE


def cmd_sweep(cfg: RunConfig, sweep: str, grid: list[float]) -> int:
    if not grid:
        raise UsageError("grid is empty")
    inputs = load_inputs(cfg)
    if sweep == "alpha":
        points = sweep_alpha(inputs, grid, cfg.feas_tol, cfg.storage_mode)
    else:
        points = sweep_capacity(inputs, grid, cfg.feas_tol, cfg.storage_mode, cfg.methods)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / f"sweep_{sweep}.csv"
    write_sweep_csv(points, sweep, path)
    for p in points:
        parts = [f"{sweep}={p.value:g}"]
        if p.coalitional_worth is not None:
            parts.append(f"coalitional worth {p.coalitional_worth:.4f}")
        if p.community_worth is not None:
            parts.append(f"community worth {p.community_worth:.4f}")
        if p.consumer_savings is not None:
            parts.append(f"consumer savings {p.consumer_savings:.4f}")
        print("  ".join(parts))
    print(f"wrote {path}")
    return 0


def cmd_shapley(cfg: RunConfig, day: int) -> int:
    inputs = load_inputs(cfg)
    if not 1 <= day <= len(inputs.days):
        raise UsageError(f"--day must lie in 1..{len(inputs.days)}")
    methods = [m for m in cfg.methods if m is not Method.INDIVIDUAL]
    if not methods:
        raise UsageError("shapley needs a coalitional or community method")
    run = run_horizon(inputs.truncated(day), cfg.methods, False, cfg.storage_mode, cfg.feas_tol, cfg.jobs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    ok = True
    for m in methods:
        table, alloc = day_game(run, day - 1, m, cfg.feas_tol, cfg.jobs)
        write_table_csv(table, cfg.out / f"coalitions_{m.value}_day{day:02d}.csv")
        write_allocation_csv(alloc, cfg.out / f"shapley_{m.value}_day{day:02d}.csv")
        worths = table.worths(m)
        print(f"{m.value} game, day {day}: {table.size - 1} coalitions, worth includes the waste penalty")
        print(f"  {'member':<10}{'payoff EUR':>14}")
        for i, member in enumerate(alloc.members):
            bit = 1 << i
            marginal = max(abs(worths[mask | bit] - worths[mask]) for mask in range(table.size) if not mask & bit)
            flag = "  (dummy)" if marginal <= DUMMY_TOL and abs(alloc.payoffs[member]) <= DUMMY_TOL else ""
            print(f"  {member:<10}{alloc.payoffs[member]:>14.6f}{flag}")
        gap = alloc.efficiency_gap()
        passed = gap <= 1e-9 * (1 + abs(alloc.grand_worth))
        ok &= passed
        print(
            f"  efficiency: sum {sum(alloc.payoffs.values()):.9f} vs v(grand) {alloc.grand_worth:.9f}"
            f" gap {gap:.2e} {'ok' if passed else 'FAILED'}"
        )
    return 0 if ok else EXIT_SOLVE


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", type=Path, help="scenario or multi-day horizon JSON")
    src.add_argument("--synth-seed", type=int, help="generate a synthetic community with this seed")
    p.add_argument("--days", type=int, help="number of days to simulate (default: all)")
    p.add_argument("--methods", default="all", help="all or a comma list of individual,coalitional,community")
    p.add_argument("--alpha", type=float, help="community price ratio (community method only)")
    p.add_argument("--delta", type=float, help="minimum consumer savings in EUR per day")
    p.add_argument("--feas-tol", type=float, default=FEAS_TOL)
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or ./coalgrid-out)")
    p.add_argument("--storage-mode", choices=STORAGE_MODES, default=INDEPENDENT)
    p.add_argument("--jobs", type=int, default=None, help="worker processes for coalition solves")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coalgrid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="simulate the horizon and write cost logs")
    _add_common(run)
    run.add_argument("--shapley", action="store_true", help="compute daily coalition tables and Shapley payoffs")
    sw = sub.add_parser("sweep", help="sweep alpha or per-member storage capacity")
    sw.add_argument("sweep", choices=("alpha", "capacity"))
    sw.add_argument("--grid", required=True, help="start:stop:step (inclusive) or comma list")
    _add_common(sw)
    sh = sub.add_parser("shapley", help="coalition table and Shapley payoffs for one day")
    sh.add_argument("--day", type=int, required=True)
    _add_common(sh)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    out = args.out or Path(os.environ.get(OUT_ENV, "coalgrid-out"))
    cfg = RunConfig(
        scenario=args.scenario,
        synth_seed=args.synth_seed,
        methods=parse_methods(args.methods),
        days=args.days,
        alpha=args.alpha,
        delta=args.delta,
        feas_tol=args.feas_tol,
        out=out,
        shapley=getattr(args, "shapley", False),
        storage_mode=args.storage_mode,
        jobs=args.jobs if args.jobs is not None else default_jobs(),
    )
    cfg.check()
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.sweep, parse_grid(args.grid))
        return cmd_shapley(cfg, args.day)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IngestionError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DispatchError, HorizonError, SolverStalled, TableError, DomainError) as exc:
        print(f"solve error: {exc}", file=sys.stderr)
        return EXIT_SOLVE


if __name__ == "__main__":
    sys.exit(main())
