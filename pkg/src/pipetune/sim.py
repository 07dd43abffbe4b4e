"""Deterministic trace-driven event simulator with measurement hooks.

Programs see a stream of events; handlers mutate program state and may emit
follow-up events (recirculation). Measurement hooks write into an
append-only :class:`MeasurementSink` that handlers can never read, so
recording can be disabled without changing a single program-visible state
transition. Everything is a pure function of (program, config, trace, seed).
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field

from .errors import ConfigInvalid
from .params import Config, validate_config
from .structures import derive_seed

DEFAULT_RECIRC_DELAY_NS = 1000


@dataclass(slots=True)
class Event:
    name: str
    time: int
    payload: dict[str, int] = field(default_factory=dict)


class Trace:
    """Time-ordered event list; timestamps must be non-decreasing and >= 0."""

    def __init__(self, events):
        self.events = list(events)
        prev = 0
        for i, ev in enumerate(self.events):
            if ev.time < prev:
                raise ValueError(f"event {i} at t={ev.time} precedes t={prev}")
            prev = ev.time

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def __eq__(self, other):
        return isinstance(other, Trace) and self.events == other.events


class MeasurementSink:
    """Append-only records per hook name, invisible to program handlers."""

    enabled = True

    def __init__(self):
        self.records: dict[str, list[tuple]] = {}

    def record(self, hook: str, values: tuple) -> None:
        self.records.setdefault(hook, []).append(values)

    def counts(self, hook: str) -> dict:
        out: dict = {}
        for values in self.records.get(hook, ()):
            k = values[0] if len(values) == 1 else values
            out[k] = out.get(k, 0) + 1
        return out

    def to_json_text(self) -> str:
        plain = {hook: [list(v) for v in recs] for hook, recs in self.records.items()}
        return json.dumps(plain, sort_keys=True, separators=(",", ":")) + "\n"


class NullSink(MeasurementSink):
    """No-op sink: proves measurement is erasable."""

    enabled = False

    def record(self, hook: str, values: tuple) -> None:
        pass


class SimError(Exception):
    pass


class SimRun:
    """One single-threaded simulation: clock, RNG stream, pending events."""

    def __init__(self, program, config: Config, seed: int, sink: MeasurementSink,
                 recirc_delay_ns: int = DEFAULT_RECIRC_DELAY_NS):
        self.program = program
        self.config = config
        self.seed = seed
        self.sink = sink
        self.recirc_delay_ns = recirc_delay_ns
        self.clock = 0
        self.rng = random.Random(derive_seed(seed, "sim.rng"))
        self.state = program.make_state(config, derive_seed(seed, "sim.structures"))
        self.pending: list[tuple[int, int, Event]] = []
        self.emitted = 0
        self.dispatched = 0
        self._seq = 0

    def record(self, hook: str, *values) -> None:
        self.sink.record(hook, values)

    def emit(self, name: str, payload: dict[str, int] | None = None, delay: int | None = None) -> None:
        """Enqueue a program-generated event at clock + delay.

        The default delay is the recirculation latency; delays must be
        non-negative so generated events never precede the current clock.
        """
        if delay is None:
            delay = self.recirc_delay_ns
        if delay < 0:
            raise SimError(f"event {name!r} generated {-delay} ns before the clock")
        at = self.clock + delay
        # heapq entries are (time, seq): seq keeps equal-time emissions in order.
        heapq.heappush(self.pending, (at, self._seq, Event(name, at, payload or {})))
        self.emitted += 1
        self._seq += 1


def run_trace(program, config: Config, trace: Trace, seed: int, *,
              sink: MeasurementSink | None = None,
              recirc_delay_ns: int = DEFAULT_RECIRC_DELAY_NS,
              observer=None) -> SimRun:
    """Dispatch every trace event and every generated event exactly once.

    Events run in (time, insertion-order): trace events are pre-inserted, so
    a generated event never preempts a trace event that shares its timestamp.
    Returns the finished run, whose ``sink`` holds all measurements.
    """
    violations = validate_config(program.param_specs(), config)
    if violations:
        raise ConfigInvalid(violations)
    run = SimRun(program, config, seed, sink if sink is not None else MeasurementSink(),
                 recirc_delay_ns)
    handlers = program.handlers()
    events = trace.events
    n = len(events)
    # Pending seq numbers start after the trace block: at equal timestamps,
    # earlier insertion (the trace event) wins.
    run._seq = n
    pending = run.pending
    i = 0
    state = run.state
    while i < n or pending:
        if pending and (i >= n or pending[0][0] < events[i].time):
            t, _, ev = heapq.heappop(pending)
        else:
            ev = events[i]
            t = ev.time
            i += 1
        run.clock = t
        try:
            handler = handlers[ev.name]
        except KeyError:
            raise SimError(f"{program.name!r} has no handler for event {ev.name!r}") from None
        handler(state, ev, run)
        run.dispatched += 1
        if observer is not None:
            observer(run, ev)
    program.finalize(state, run)
    return run


def simulate_trace(program, config: Config, trace: Trace, seed: int, *,
                   sink: MeasurementSink | None = None,
                   recirc_delay_ns: int = DEFAULT_RECIRC_DELAY_NS,
                   observer=None) -> MeasurementSink:
    return run_trace(program, config, trace, seed, sink=sink,
                     recirc_delay_ns=recirc_delay_ns, observer=observer).sink
