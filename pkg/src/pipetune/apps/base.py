"""Program interface the simulator and optimizer drive."""

from __future__ import annotations

import hashlib

from ..params import Config, ParamSpec
from ..pipeline import DataflowGraph


class SketchProgram:
    """A parameterized packet-processing program.

    Handlers mutate program state through the simulator and may only talk to
    the measurement sink via ``run.record`` — they never read it back, so
    measurements are erasable. The objective is a pure function of the
    finished sink (plus declared config values).
    """

    name = "program"

    def param_specs(self) -> list[ParamSpec]:
        raise NotImplementedError

    def resource_specs(self) -> list[ParamSpec]:
        return [s for s in self.param_specs() if s.is_resource]

    def selector_specs(self) -> list[ParamSpec]:
        return [s for s in self.param_specs() if s.is_selector]

    def search_specs(self) -> list[ParamSpec]:
        """Nonresource parameters searched in phase 2 (selectors excluded:
        preprocessing already enumerates those per branch)."""
        return [s for s in self.param_specs() if not s.is_resource and not s.is_selector]

    def active_resource_names(self, selectors: dict) -> set[str]:
        """Resource parameters that matter under the given selector branch."""
        return {s.name for s in self.resource_specs()}

    def make_state(self, config: Config, seed: int):
        raise NotImplementedError

    def handlers(self) -> dict:
        raise NotImplementedError

    def footprint(self, config: Config) -> DataflowGraph:
        raise NotImplementedError

    def finalize(self, state, run) -> None:
        """Measurement-side flush after the last event; must not mutate state."""

    def objective(self, sink, config: Config) -> float:
        raise NotImplementedError

    def state_digest(self, state) -> str:
        raise NotImplementedError


def digest(parts) -> str:
    """Stable digest of nested tuples/ints/bytes for trajectory comparisons."""
    return hashlib.sha256(repr(parts).encode()).hexdigest()


_REGISTRY: dict[str, type] = {}


def register(name: str):
    def deco(cls):
        _REGISTRY[name] = cls
        return cls

    return deco


def registered_apps() -> list[str]:
    return sorted(_REGISTRY)


def get_program(name: str, **kwargs) -> SketchProgram:
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown app {name!r}; registered: {', '.join(registered_apps())}") from None
    return cls(**kwargs)
