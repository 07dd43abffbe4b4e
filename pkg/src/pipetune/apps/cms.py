"""Standalone count-min sketch frequency estimator.

Every request updates the sketch. The measurement side records each key as
it arrives and, after the trace, the sketch's final estimate for every
distinct key; the objective compares those estimates against exact counts
recomputed from the recorded keys.
"""

from __future__ import annotations

from ..params import COUNT, MEMORY, Config, IntRange, ParamSpec, Pow2Range
from ..pipeline import Action, DataflowGraph
from ..structures import Cms
from . import objectives
from .base import SketchProgram, digest, register


@register("cms")
class CmsProgram(SketchProgram):
    name = "cms"

    def __init__(self, cols_exp=(4, 12), rows_max=8):
        self._specs = [
            ParamSpec("cols", MEMORY, Pow2Range(*cols_exp)),
            ParamSpec("rows", COUNT, IntRange(1, rows_max)),
        ]

    def param_specs(self):
        return list(self._specs)

    def make_state(self, config: Config, seed: int):
        return Cms(config["rows"], config["cols"], seed, "cms")

    def handlers(self):
        return {"request": self.on_request}

    def on_request(self, state: Cms, ev, run):
        key = ev.payload["key"]
        state.update(key)
        run.record("packets", key)

    def finalize(self, state: Cms, run):
        seen = sorted({key for (key,) in run.sink.records.get("packets", ())})
        for key in seen:
            run.record("est", key, state.query(key))

    def footprint(self, config: Config) -> DataflowGraph:
        return DataflowGraph.of(
            Action(f"row_{j}", frozenset(), (f"sketch_arr_{j}", config["cols"]), 1, 1)
            for j in range(config["rows"])
        )

    def objective(self, sink, config):
        return objectives.mean_estimate_error(sink)

    def state_digest(self, state: Cms) -> str:
        return digest(state.state_tuple())
