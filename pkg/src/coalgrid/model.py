"""Community, tariff and horizon types, scenario validation and the scenario JSON format."""
from __future__ import annotations

import dataclasses
import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

SCHEMA_VERSION = 1


class Kind(str, enum.Enum):
    PROSUMER = "prosumer"
    STORAGE_OWNER = "storage_owner"
    CONSUMER = "consumer"


def _vec(values: Iterable[float]) -> np.ndarray:
    arr = np.array(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeGrid:
    T: int = 24
    slot_hours: float = 1.0


@dataclass(frozen=True)
class StorageSpec:
    capacity_kwh: float
    rate_kwh: float
    leakage: float = 0.0
    initial_kwh: float = 0.0

    def with_initial(self, initial_kwh: float) -> StorageSpec:
        # clamp solver round-off so a carried-over level stays inside [0, C]
        level = min(max(float(initial_kwh), 0.0), self.capacity_kwh)
        return dataclasses.replace(self, initial_kwh=level)


@dataclass(frozen=True)
class Household:
    id: str
    kind: Kind
    demand_kwh: np.ndarray
    renewable_kwh: np.ndarray
    storage: StorageSpec | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "demand_kwh", _vec(self.demand_kwh))
        object.__setattr__(self, "renewable_kwh", _vec(self.renewable_kwh))

    @property
    def is_member(self) -> bool:
        return self.kind is not Kind.CONSUMER

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Household):
            return NotImplemented
        return (
            self.id == other.id
            and self.kind == other.kind
            and np.array_equal(self.demand_kwh, other.demand_kwh)
            and np.array_equal(self.renewable_kwh, other.renewable_kwh)
            and self.storage == other.storage
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Tariff:
    grid_price: np.ndarray
    alpha: float = 0.9

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid_price", _vec(self.grid_price))

    @property
    def community_price(self) -> np.ndarray:
        return self.alpha * self.grid_price

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tariff):
            return NotImplemented
        return self.alpha == other.alpha and np.array_equal(self.grid_price, other.grid_price)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class PriceParams:
    storage_cycle_price: float = 0.0001  # pi, EUR per kWh charged or discharged
    waste_penalty_price: float = 0.001  # sigma, EUR per kWh of unused renewable
    transfer_price: float = 0.0001  # tau, EUR per kWh given or received
    consumer_margin: float = 0.0  # delta, EUR of savings a consumer must see


@dataclass(frozen=True)
class Scenario:
    grid: TimeGrid
    households: tuple[Household, ...]
    tariff: Tariff
    prices: PriceParams = field(default_factory=PriceParams)

    def __post_init__(self) -> None:
        object.__setattr__(self, "households", tuple(self.households))

    @property
    def members(self) -> tuple[Household, ...]:
        return tuple(h for h in self.households if h.is_member)

    @property
    def consumers(self) -> tuple[Household, ...]:
        return tuple(h for h in self.households if not h.is_member)

    @property
    def member_ids(self) -> tuple[str, ...]:
        return tuple(h.id for h in self.members)

    def household(self, hid: str) -> Household:
        for h in self.households:
            if h.id == hid:
                return h
        raise KeyError(hid)

    def replace(self, **changes: Any) -> Scenario:
        return dataclasses.replace(self, **changes)

    def with_storage_levels(self, levels: dict[str, float]) -> Scenario:
        hh = []
        for h in self.households:
            if h.id in levels and h.storage is not None:
                h = dataclasses.replace(h, storage=h.storage.with_initial(levels[h.id]))
            hh.append(h)
        return self.replace(households=tuple(hh))

    def with_alpha(self, alpha: float) -> Scenario:
        return self.replace(tariff=Tariff(self.tariff.grid_price, alpha))

    def with_capacity(self, capacity_kwh: float) -> Scenario:
        hh = []
        for h in self.households:
            if h.storage is not None:
                st = dataclasses.replace(
                    h.storage,
                    capacity_kwh=capacity_kwh,
                    initial_kwh=min(h.storage.initial_kwh, capacity_kwh),
                )
                h = dataclasses.replace(h, storage=st)
            hh.append(h)
        return self.replace(households=tuple(hh))


def validate_scenario(s: Scenario) -> list[str]:
    """Return one message per violated invariant; an empty list means valid."""
    out: list[str] = []
    T = s.grid.T
    if not isinstance(T, int) or T < 1:
        out.append(f"grid: T must be a positive integer, got {T!r}")
        T = None
    if not s.grid.slot_hours > 0:
        out.append(f"grid: slot_hours must be > 0, got {s.grid.slot_hours}")
    if not s.households:
        out.append("scenario: at least one household is required")
    seen: set[str] = set()
    for h in s.households:
        tag = f"household {h.id}"
        if h.id in seen:
            out.append(f"{tag}: duplicate id")
        seen.add(h.id)
        for label, vec in (("demand_kwh", h.demand_kwh), ("renewable_kwh", h.renewable_kwh)):
            if T is not None and vec.shape != (T,):
                out.append(f"{tag}: {label} has length {vec.size}, expected {T}")
            if not np.all(np.isfinite(vec)) or np.any(vec < 0):
                out.append(f"{tag}: {label} must be finite and nonnegative")
        has_res = bool(np.any(h.renewable_kwh != 0))
        if h.kind is Kind.CONSUMER:
            if h.storage is not None:
                out.append(f"{tag}: consumer must not own storage")
            if has_res:
                out.append(f"{tag}: consumer must have zero renewable_kwh")
        else:
            if h.storage is None:
                out.append(f"{tag}: {h.kind.value} requires a storage spec")
            if h.kind is Kind.STORAGE_OWNER and has_res:
                out.append(f"{tag}: storage-only owner must have zero renewable_kwh")
        st = h.storage
        if st is not None:
            if not st.capacity_kwh >= 0:
                out.append(f"{tag}: capacity_kwh must be >= 0")
            if not st.rate_kwh >= 0:
                out.append(f"{tag}: rate_kwh must be >= 0")
            if not 0 <= st.leakage < 1:
                out.append(f"{tag}: leakage must lie in [0, 1)")
            if not 0 <= st.initial_kwh <= st.capacity_kwh:
                out.append(f"{tag}: initial_kwh must lie in [0, capacity_kwh]")
    gp = s.tariff.grid_price
    if T is not None and gp.shape != (T,):
        out.append(f"tariff: grid_price has length {gp.size}, expected {T}")
    if not np.all(np.isfinite(gp)) or np.any(gp < 0):
        out.append("tariff: grid_price must be finite and nonnegative")
    if not 0 <= s.tariff.alpha <= 1:
        out.append(f"tariff: alpha must lie in [0, 1], got {s.tariff.alpha}")
    p = s.prices
    for name in ("storage_cycle_price", "waste_penalty_price", "transfer_price", "consumer_margin"):
        val = getattr(p, name)
        if not (math.isfinite(val) and val >= 0):
            out.append(f"prices: {name} must be finite and >= 0, got {val}")
    return out


def check_scenario(s: Scenario) -> Scenario:
    """Raise ``ValueError`` listing all violations; warn when the waste penalty is zero."""
    problems = validate_scenario(s)
    if problems:
        raise ValueError("invalid scenario:\n  " + "\n  ".join(problems))
    if s.prices.waste_penalty_price == 0:
        warnings.warn("waste_penalty_price is 0; surplus renewable energy is not discouraged", stacklevel=2)
    return s


# --- JSON ---------------------------------------------------------------


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "grid": {"T": s.grid.T, "slot_hours": s.grid.slot_hours},
        "tariff": {"grid_price": s.tariff.grid_price.tolist(), "alpha": s.tariff.alpha},
        "prices": dataclasses.asdict(s.prices),
        "households": [
            {
                "id": h.id,
                "kind": h.kind.value,
                "demand_kwh": h.demand_kwh.tolist(),
                "renewable_kwh": h.renewable_kwh.tolist(),
                "storage": dataclasses.asdict(h.storage) if h.storage is not None else None,
            }
            for h in s.households
        ],
    }


def scenario_from_dict(d: dict[str, Any]) -> Scenario:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        households = tuple(
            Household(
                id=str(h["id"]),
                kind=Kind(h["kind"]),
                demand_kwh=h["demand_kwh"],
                renewable_kwh=h.get("renewable_kwh") or [0.0] * len(h["demand_kwh"]),
                storage=StorageSpec(**h["storage"]) if h.get("storage") else None,
            )
            for h in d["households"]
        )
        return Scenario(
            grid=TimeGrid(**d["grid"]),
            households=households,
            tariff=Tariff(**d["tariff"]),
            prices=PriceParams(**d.get("prices", {})),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scenario document: {exc}") from exc


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1))


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


# --- results -------------------------------------------------------------


@dataclass(frozen=True)
class CostBreakdown:
    """Monetary cost items in EUR. ``penalty_charge`` is reported but not part of ``total``."""

    grid_cost: float = 0.0
    storage_cost: float = 0.0
    operation_cost: float = 0.0
    purchase_revenue: float = 0.0
    purchase_cost: float = 0.0
    penalty_charge: float = 0.0

    @property
    def total(self) -> float:
        return (
            self.grid_cost
            + self.storage_cost
            + self.operation_cost
            - self.purchase_revenue
            + self.purchase_cost
        )

    def __add__(self, other: CostBreakdown) -> CostBreakdown:
        return CostBreakdown(*(a + b for a, b in zip(dataclasses.astuple(self), dataclasses.astuple(other))))

    @classmethod
    def sum(cls, items: Iterable[CostBreakdown]) -> CostBreakdown:
        acc = cls()
        for c in items:
            acc = acc + c
        return acc

    def as_dict(self) -> dict[str, float]:
        d = dataclasses.asdict(self)
        d["total"] = self.total
        return d


@dataclass(frozen=True)
class HouseholdDispatch:
    b: np.ndarray
    r: np.ndarray
    s: np.ndarray
    a: np.ndarray
    cost: CostBreakdown


@dataclass(frozen=True)
class DispatchSolution:
    problem: Any  # dispatch.ProblemKind
    households: dict[str, HouseholdDispatch]
    aggregate: CostBreakdown  # over the participating members
    consumer_aggregate: CostBreakdown
    lp_objective: float
    iterations: int = 0

    def terminal_storage(self) -> dict[str, float]:
        return {hid: float(hd.s[-1]) for hid, hd in self.households.items() if hd.s.size and hid in self.problem.members}


# --- multi-day inputs ----------------------------------------------------


@dataclass(frozen=True)
class DayInputs:
    """Profiles that change from day to day; roster and storage specs stay fixed."""

    grid_price: np.ndarray
    demand_kwh: Mapping[str, np.ndarray]
    renewable_kwh: Mapping[str, np.ndarray]


@dataclass(frozen=True)
class HorizonInputs:
    base: Scenario  # day-1 scenario; its storage levels are the day-1 initial levels
    days: tuple[DayInputs, ...]

    def day_scenario(self, d: int, storage_levels: Mapping[str, float] | None = None) -> Scenario:
        day = self.days[d]
        hh = []
        for h in self.base.households:
            w = day.renewable_kwh.get(h.id)
            hh.append(
                dataclasses.replace(
                    h,
                    demand_kwh=day.demand_kwh[h.id],
                    renewable_kwh=w if w is not None else np.zeros(self.base.grid.T),
                )
            )
        s = self.base.replace(households=tuple(hh), tariff=Tariff(day.grid_price, self.base.tariff.alpha))
        if storage_levels:
            s = s.with_storage_levels(dict(storage_levels))
        return s

    def replace_base(self, base: Scenario) -> HorizonInputs:
        return HorizonInputs(base, self.days)

    def truncated(self, n_days: int) -> HorizonInputs:
        if not 1 <= n_days <= len(self.days):
            raise ValueError(f"requested {n_days} days, inputs hold {len(self.days)}")
        return HorizonInputs(self.base, self.days[:n_days])


def horizon_to_dict(h: HorizonInputs) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario_to_dict(h.base),
        "days": [
            {
                "grid_price": d.grid_price.tolist(),
                "demand_kwh": {k: np.asarray(v).tolist() for k, v in d.demand_kwh.items()},
                "renewable_kwh": {k: np.asarray(v).tolist() for k, v in d.renewable_kwh.items()},
            }
            for d in h.days
        ],
    }


def horizon_from_dict(d: dict[str, Any]) -> HorizonInputs:
    """Accept either a multi-day document or a bare scenario (treated as one day)."""
    if "scenario" not in d:
        s = scenario_from_dict(d)
        day = DayInputs(
            s.tariff.grid_price,
            {h.id: h.demand_kwh for h in s.households},
            {h.id: h.renewable_kwh for h in s.households},
        )
        return HorizonInputs(s, (day,))
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
    base = scenario_from_dict(d["scenario"])
    days = tuple(
        DayInputs(
            _vec(day["grid_price"]),
            {k: _vec(v) for k, v in day["demand_kwh"].items()},
            {k: _vec(v) for k, v in day.get("renewable_kwh", {}).items()},
        )
        for day in d["days"]
    )
    return HorizonInputs(base, days)


def load_horizon(path: str | Path) -> HorizonInputs:
    return horizon_from_dict(json.loads(Path(path).read_text()))


def save_horizon(h: HorizonInputs, path: str | Path) -> None:
    Path(path).write_text(json.dumps(horizon_to_dict(h)))
