"""Linear BGK and Fokker-Planck kinetic equations on the slab (0, 1) with Maxwell walls."""

from __future__ import annotations

__version__ = "0.1.0"

from .boundary import BoundaryConfig
from .collision import CollisionKind
from .errors import ConfigError, ContractError, FitError, NumericalError, SlabkinError
from .transport import SimConfig, build_setup, run_simulation

__all__ = [
    "BoundaryConfig", "CollisionKind", "ConfigError", "ContractError", "FitError",
    "NumericalError", "SimConfig", "SlabkinError", "build_setup", "run_simulation",
]
