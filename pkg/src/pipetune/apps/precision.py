"""Heavy-hitter tracking with probabilistic displacement.

Popular flows accumulate counts; colliding newcomers displace the least
popular candidate cell with probability 1/(count+1), and each displacement
costs one recirculated packet. The objective is the mean relative count
error over the true top flows.
"""

from __future__ import annotations

from ..params import COUNT, MEMORY, Config, IntRange, ParamSpec, Pow2Range
from ..pipeline import Action, DataflowGraph
from ..structures import PrecisionTable
from . import objectives
from .base import SketchProgram, digest, register


@register("precision")
class PrecisionProgram(SketchProgram):
    name = "precision"

    def __init__(self, slots_exp=(2, 12), ways_max=8, topk=objectives.TOPK):
        self._specs = [
            ParamSpec("slots", MEMORY, Pow2Range(*slots_exp)),
            # ways rest at 1 during the slots scan: resting at the generic
            # start of 4 hides wide-slot configs that fit with fewer ways.
            ParamSpec("ways", COUNT, IntRange(1, ways_max), start=1),
        ]
        self.topk = topk

    def param_specs(self):
        return list(self._specs)

    def make_state(self, config: Config, seed: int):
        return PrecisionTable(config["ways"], config["slots"], seed, "precision")

    def handlers(self):
        return {"request": self.on_request, "recirc_pass": self.on_recirc}

    def on_request(self, state: PrecisionTable, ev, run):
        key = ev.payload["key"]
        outcome = state.access(key, run.rng)
        run.record("packets", key)
        if outcome == PrecisionTable.REPLACED:
            run.record("recirc")
            run.emit("recirc_pass", {"key": key})

    def on_recirc(self, state, ev, run):
        # Second pipeline pass that installs the displacing key on hardware;
        # the table was already updated when displacement was decided.
        pass

    def finalize(self, state: PrecisionTable, run):
        if not run.sink.enabled:
            return
        for key, count in state.cells():
            run.record("cells", key, count)

    def footprint(self, config: Config) -> DataflowGraph:
        actions = []
        for w in range(config["ways"]):
            actions.append(Action(f"key_{w}", frozenset(), (f"key_arr_{w}", config["slots"]), 1, 1))
            actions.append(Action(f"count_{w}", frozenset({f"key_{w}"}), (f"count_arr_{w}", config["slots"]), 0, 1))
        return DataflowGraph.of(actions)

    def objective(self, sink, config):
        return objectives.topk_error(sink, self.topk)

    def state_digest(self, state: PrecisionTable) -> str:
        return digest(state.state_tuple())
