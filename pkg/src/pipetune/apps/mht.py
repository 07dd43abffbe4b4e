"""Multi-hash table keyed by flow: optimize the collision ratio."""

from __future__ import annotations

from ..params import COUNT, MEMORY, Config, IntRange, ParamSpec, Pow2Range
from ..pipeline import Action, DataflowGraph
from ..structures import MultiHashTable
from . import objectives
from .base import SketchProgram, digest, register


@register("mht")
class MhtProgram(SketchProgram):
    name = "mht"

    def __init__(self, slots_exp=(2, 12), ways_max=8):
        self._specs = [
            ParamSpec("slots", MEMORY, Pow2Range(*slots_exp)),
            ParamSpec("ways", COUNT, IntRange(1, ways_max)),
        ]

    def param_specs(self):
        return list(self._specs)

    def make_state(self, config: Config, seed: int):
        return MultiHashTable(config["ways"], config["slots"], seed, "mht")

    def handlers(self):
        return {"request": self.on_request}

    def on_request(self, state: MultiHashTable, ev, run):
        outcome = state.access(ev.payload["key"], run.clock)
        run.record("access", outcome)

    def footprint(self, config: Config) -> DataflowGraph:
        return DataflowGraph.of(
            Action(f"way_{w}", frozenset(), (f"table_arr_{w}", config["slots"]), 1, 1)
            for w in range(config["ways"])
        )

    def objective(self, sink, config):
        return objectives.collision_ratio(sink)

    def state_digest(self, state: MultiHashTable) -> str:
        return digest(state.state_tuple())
