"""Input series: wind power model, CSV ingestion and the synthetic bundled dataset."""
from .series import IngestionError, SeriesFile, load_demand, load_series, write_series
from .synth import RosterSpec, load_bundled, synth_scenario, write_bundle
from .wind import WindTurbineSpec, wind_power_kwh

__all__ = [
    "IngestionError",
    "RosterSpec",
    "SeriesFile",
    "WindTurbineSpec",
    "load_bundled",
    "load_demand",
    "load_series",
    "synth_scenario",
    "wind_power_kwh",
    "write_bundle",
    "write_series",
]
