"""Cubic wind-turbine power model: P = 0.5 * D * K_p * A * V^3."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WindTurbineSpec:
    power_coefficient: float = 0.3
    rotor_radius_m: float = 2.63
    air_density: float = 1.225  # kg/m^3, sea-level standard

    def __post_init__(self) -> None:
        for name in ("power_coefficient", "rotor_radius_m", "air_density"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def swept_area_m2(self) -> float:
        return math.pi * self.rotor_radius_m**2


def wind_power_kwh(v_ms, spec: WindTurbineSpec = WindTurbineSpec(), slot_hours: float = 1.0):
    """Energy in kWh produced over one slot at wind speed ``v_ms`` (scalar or array).

    No rated-power cap or cut-out speed is applied.
    """
    v = np.asarray(v_ms, dtype=float)
    if np.any(v < 0) or np.any(np.isnan(v)):
        raise ValueError("wind speed must be nonnegative")
    watts = 0.5 * spec.air_density * spec.power_coefficient * spec.swept_area_m2 * v**3
    kwh = watts * slot_hours / 1000.0
    return float(kwh) if kwh.ndim == 0 else kwh
