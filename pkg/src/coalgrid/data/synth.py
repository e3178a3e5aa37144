"""Seeded synthetic community data: prices, wind, household demand.

Stands in for market prices, measured weather and an external load model. The
defaults describe a nine-household community: three wind-plus-storage
prosumers, three storage-only owners and three plain consumers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..model import (
    DayInputs,
    HorizonInputs,
    Household,
    Kind,
    PriceParams,
    Scenario,
    StorageSpec,
    Tariff,
    TimeGrid,
)
from .series import SeriesFile, load_demand, load_series, write_series
from .wind import WindTurbineSpec, wind_power_kwh

BUNDLED_SEED = 2013
START = np.datetime64("2013-05-01T00:00:00", "s")


@dataclass(frozen=True)
class RosterSpec:
    ids: tuple[str, ...] = ("m1", "m2", "m3", "m4", "m5", "m6", "p1", "p2", "p3")
    kinds: tuple[Kind, ...] = (Kind.PROSUMER,) * 3 + (Kind.STORAGE_OWNER,) * 3 + (Kind.CONSUMER,) * 3
    inhabitants: tuple[int, ...] = (3, 4, 4, 2, 5, 4, 3, 4, 2)
    capacity_kwh: float = 5.0
    rate_kwh: float = 2.0
    leakage: float = 0.001
    initial_kwh: float = 0.0
    alpha: float = 0.9
    prices: PriceParams = field(default_factory=PriceParams)
    turbine: WindTurbineSpec = field(default_factory=WindTurbineSpec)
    renewable_jitter: float = 0.10  # +-10% multiplicative per household and hour
    days: int = 31

    def __post_init__(self) -> None:
        if not len(self.ids) == len(self.kinds) == len(self.inhabitants):
            raise ValueError("ids, kinds and inhabitants must have equal length")


# hourly weights of a residential day: night base, morning and evening peaks
_SHAPE = np.array(
    [0.55, 0.45, 0.40, 0.40, 0.42, 0.55, 0.95, 1.35, 1.25, 0.95, 0.85, 0.85,
     0.95, 0.85, 0.80, 0.85, 1.05, 1.45, 1.75, 1.80, 1.65, 1.40, 1.05, 0.75]
)
_SHAPE = _SHAPE / _SHAPE.sum()


def synth_prices(rng: np.random.Generator, days: int) -> np.ndarray:
    """Hourly EUR/kWh with a double-peaked daily profile and drifting daily level."""
    hour = np.arange(24)
    profile = (
        0.85
        + 0.20 * np.exp(-0.5 * ((hour - 8.5) / 1.8) ** 2)
        + 0.25 * np.exp(-0.5 * ((hour - 18.5) / 2.2) ** 2)
        - 0.12 * np.exp(-0.5 * ((hour - 3.5) / 2.0) ** 2)
    )
    level = np.empty(days)
    x = 0.0
    for d in range(days):
        x = 0.7 * x + rng.normal(0.0, 0.12)
        weekend = 0.9 if d % 7 in (4, 5) else 1.0
        level[d] = 0.036 * weekend * math.exp(x)
    noise = rng.normal(0.0, 0.04, size=(days, 24))
    prices = level[:, None] * profile[None, :] * (1.0 + noise)
    return np.round(np.maximum(prices, 0.004), 5).ravel()


def synth_wind(rng: np.random.Generator, hours: int, scale: float = 4.5, shape: float = 2.0) -> np.ndarray:
    """Autocorrelated hourly wind speeds with Weibull marginals (Gaussian copula)."""
    z = np.empty(hours)
    prev = rng.normal()
    phi = 0.93
    for t in range(hours):
        prev = phi * prev + math.sqrt(1 - phi * phi) * rng.normal()
        z[t] = prev
    u = 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))
    u = np.clip(u, 1e-12, 1 - 1e-12)
    return np.round(scale * (-np.log1p(-u)) ** (1.0 / shape), 3)


def synth_demand(rng: np.random.Generator, inhabitants: int, days: int) -> np.ndarray:
    daily = 2.0 + 1.6 * inhabitants
    out = np.empty((days, 24))
    for d in range(days):
        day_factor = 1.0 + rng.uniform(-0.1, 0.1)
        hourly = _SHAPE * daily * day_factor * rng.lognormal(0.0, 0.15, size=24)
        out[d] = hourly
    return np.round(out.ravel(), 4)


@dataclass(frozen=True)
class RawSeries:
    """Community-level inputs before they are turned into per-household profiles."""

    timestamps: np.ndarray
    price: np.ndarray
    wind_ms: np.ndarray
    demand: dict[str, np.ndarray]


def synth_raw(seed: int, roster: RosterSpec = RosterSpec()) -> RawSeries:
    rng = np.random.default_rng(seed)
    hours = 24 * roster.days
    price = synth_prices(rng, roster.days)
    wind = synth_wind(rng, hours)
    demand = {hid: synth_demand(rng, n, roster.days) for hid, n in zip(roster.ids, roster.inhabitants)}
    ts = START + np.arange(hours) * np.timedelta64(3600, "s")
    return RawSeries(ts, price, wind, demand)


def assemble(raw: RawSeries, roster: RosterSpec, seed: int) -> HorizonInputs:
    """Turn raw series into a horizon: per-prosumer renewable gets its own seeded jitter."""
    rng = np.random.default_rng([seed, 1])
    hours = raw.price.size
    if hours % 24:
        raise ValueError("series must cover whole days")
    n_days = hours // 24
    base_kwh = wind_power_kwh(raw.wind_ms, roster.turbine)
    renewable = {}
    for hid, kind in zip(roster.ids, roster.kinds):
        if kind is Kind.PROSUMER:
            jitter = 1.0 + rng.uniform(-roster.renewable_jitter, roster.renewable_jitter, size=hours)
            renewable[hid] = base_kwh * jitter
        else:
            renewable[hid] = np.zeros(hours)
    days = tuple(
        DayInputs(
            raw.price[24 * d : 24 * d + 24],
            {hid: raw.demand[hid][24 * d : 24 * d + 24] for hid in roster.ids},
            {hid: renewable[hid][24 * d : 24 * d + 24] for hid in roster.ids},
        )
        for d in range(n_days)
    )
    storage = StorageSpec(roster.capacity_kwh, roster.rate_kwh, roster.leakage, roster.initial_kwh)
    households = tuple(
        Household(
            hid,
            kind,
            days[0].demand_kwh[hid],
            days[0].renewable_kwh[hid],
            storage if kind is not Kind.CONSUMER else None,
        )
        for hid, kind in zip(roster.ids, roster.kinds)
    )
    base = Scenario(TimeGrid(24, 1.0), households, Tariff(days[0].grid_price, roster.alpha), roster.prices)
    return HorizonInputs(base, days)


def synth_scenario(seed: int, roster: RosterSpec = RosterSpec()) -> tuple[Scenario, HorizonInputs]:
    """Deterministic synthetic community; returns the day-1 scenario and all days."""
    horizon = assemble(synth_raw(seed, roster), roster, seed)
    return horizon.base, horizon


# --- bundled files ------------------------------------------------------------


def bundled_dir() -> Path:
    return Path(str(resources.files("coalgrid.data") / "bundled"))


def write_bundle(directory: str | Path, seed: int = BUNDLED_SEED, roster: RosterSpec = RosterSpec()) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    raw = synth_raw(seed, roster)
    write_series(SeriesFile("price", raw.timestamps, raw.price), directory / "prices.csv")
    write_series(SeriesFile("wind", raw.timestamps, raw.wind_ms), directory / "wind.csv")
    write_series(
        [SeriesFile("demand", raw.timestamps, raw.demand[hid], hid) for hid in roster.ids],
        directory / "demand.csv",
    )


def load_raw(directory: str | Path) -> RawSeries:
    directory = Path(directory)
    price = load_series(directory / "prices.csv", "price")
    wind = load_series(directory / "wind.csv", "wind")
    demand = load_demand(directory / "demand.csv")
    for name, s in [("wind", wind), *demand.items()]:
        if not np.array_equal(s.timestamps, price.timestamps):
            raise ValueError(f"{name} timestamps do not line up with prices")
    return RawSeries(price.timestamps, price.values, wind.values, {k: v.values for k, v in demand.items()})


def load_bundled(roster: RosterSpec = RosterSpec(), directory: str | Path | None = None) -> HorizonInputs:
    """The 31-day bundled synthetic dataset as horizon inputs."""
    raw = load_raw(directory or bundled_dir())
    return assemble(raw, roster, BUNDLED_SEED)
