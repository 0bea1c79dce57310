"""Two-photon counting with a Josephson photomultiplier: device rates,
master-equation dynamics and closed-form detection figures."""

from .circuit import (
    CouplingRates, DeviceConfig, LevelStructure, derive_couplings, derive_levels,
    n_max, table1_config,
)
from .config import RunConfig, bundled_config, parse_config
from .semiclassics import device_rates, two_level_gamma1, wkb_rates

__version__ = "0.1.0"

__all__ = [
    "CouplingRates", "DeviceConfig", "LevelStructure", "RunConfig", "bundled_config",
    "derive_couplings", "derive_levels", "device_rates", "n_max", "parse_config",
    "table1_config", "two_level_gamma1", "wkb_rates",
]
