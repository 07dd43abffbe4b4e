"""Unbiased RTT sampling: tune the admission probability of the fridge.

Requests enter the fridge with probability ``1/p_denom``; a stored request
is removed when its response arrives (yielding a delay sample) or when a
later request hashes onto its slot. The measurement side records every
request and response so the objective can rebuild the exact delay
distribution, then scores the sampled distribution by its worst relative
percentile error across percentiles 5..95.
"""

from __future__ import annotations

from ..params import MEMORY, NONRESOURCE, Config, ParamSpec, Pow2Range
from ..pipeline import Action, DataflowGraph
from ..structures import Fridge, formula_p
from . import objectives
from .base import SketchProgram, digest, register


@register("fridge")
class FridgeProgram(SketchProgram):
    name = "fridge"

    def __init__(self, size_exp=(6, 17), p_denom_exp=(0, 16)):
        self._specs = [
            ParamSpec("size", MEMORY, Pow2Range(*size_exp)),
            ParamSpec("p_denom", NONRESOURCE, Pow2Range(*p_denom_exp)),
        ]

    def param_specs(self):
        return list(self._specs)

    def make_state(self, config: Config, seed: int):
        return Fridge(config["size"], 1.0 / config["p_denom"], seed, "fridge")

    def handlers(self):
        return {"request": self.on_request, "response": self.on_response}

    def on_request(self, state: Fridge, ev, run):
        key = ev.payload["key"]
        state.on_request(key, run.clock, run.rng)
        run.record("request", key, run.clock)

    def on_response(self, state: Fridge, ev, run):
        key = ev.payload["key"]
        sample = state.on_response(key, run.clock)
        if sample is not None:
            run.record("sample", sample)
        run.record("response", key, run.clock)

    def footprint(self, config: Config) -> DataflowGraph:
        return DataflowGraph.of([Action("fridge_access", frozenset(), ("fridge_arr", config["size"]), 1, 1)])

    def objective(self, sink, config):
        return objectives.max_percentile_error(sink)

    def state_digest(self, state: Fridge) -> str:
        return digest(state.state_tuple())


def max_delay_span(trace) -> int:
    """Requests in flight alongside the worst-delay pair: the number of
    requests arriving between that request and its response, inclusive of
    the request itself. This feeds the closed-form recommendation
    p = largest power-of-two reciprocal <= size/span."""
    pending: dict[int, tuple[int, int]] = {}
    requests_seen = 0
    best = (0, 1)  # (delay, span)
    for ev in trace:
        key = ev.payload["key"]
        if ev.name == "request":
            requests_seen += 1
            pending[key] = (ev.time, requests_seen)
        elif ev.name == "response" and key in pending:
            t0, idx = pending.pop(key)
            delay = ev.time - t0
            if delay > best[0]:
                best = (delay, requests_seen - idx + 1)
    return best[1]


def recommended_p(trace, size: int) -> float:
    return formula_p(size, max_delay_span(trace))
