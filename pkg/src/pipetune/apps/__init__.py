"""Bundled parameterized packet-processing applications.

Each application pairs event handlers, a resource footprint, measurement
hooks, and an objective (lower is better). Apps register by name so the
service and CLI can construct them: cache, cms, mht, precision, fridge.
"""

from .base import SketchProgram, get_program, registered_apps
from .cache import CacheProgram
from .cms import CmsProgram
from .fridge import FridgeProgram
from .mht import MhtProgram
from .precision import PrecisionProgram


def make_program(name: str, objective: str | None = None) -> SketchProgram:
    """Construct a registered app, optionally overriding its objective.

    Only the cache supports alternative objectives (miss_rate,
    network_cost); the other apps score one fixed metric.
    """
    if objective:
        if name != "cache":
            raise ValueError(f"app {name!r} has a fixed objective")
        if objective not in ("miss_rate", "network_cost"):
            raise ValueError(f"cache objective must be miss_rate or network_cost, got {objective!r}")
        return get_program(name, objective_kind=objective)
    return get_program(name)


__all__ = [
    "SketchProgram",
    "get_program",
    "make_program",
    "registered_apps",
    "CacheProgram",
    "CmsProgram",
    "MhtProgram",
    "PrecisionProgram",
    "FridgeProgram",
]
