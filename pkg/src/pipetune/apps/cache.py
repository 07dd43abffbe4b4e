"""In-network key/value cache with a selectable key-popularity tracker.

The cache stores keys in a multi-way hash table (``tables`` ways of
``entries`` slots each, one candidate slot per way). A request for a cached
key is a hit. On a miss the key is inserted into an empty candidate slot, or
into a slot whose occupant has been idle longer than ``timeout_ns`` (lazy
timeout eviction). Otherwise the tracker decides whether the new key ousts
an incumbent:

* ``cms``        - a count-min sketch counts missed keys; the key is
                   promoted once its count exceeds ``promote_threshold``.
                   Promotion costs one recirculated packet.
* ``precision``  - per-slot popularity counters; the least popular candidate
                   (count c) is displaced with probability 1/(c+1).
                   Displacement costs one recirculated packet.
* ``plain``      - always displace (the slot whose occupant is stalest).
                   Never recirculates.

Resource footprint per tracker branch (one word per table slot):

    =========  ==========================================================
    plain      per table t: action cache_t, array cache_arr_t x entries,
               1 hash, 1 alu, independent
    cms        plain actions, plus per sketch row j: action cms_j,
               array cms_arr_j x cms_cols, 1 hash, 1 alu,
               depends on every cache_t (tracker runs after lookup)
    precision  plain actions, plus per table t: action count_t,
               array count_arr_t x entries, 0 hash (reuses the lookup
               index), 1 alu, depends on cache_t
    =========  ==========================================================

Hooks: ``logHits(found)`` once per request, ``recirc()`` on every
tracker-induced insert that needs a second pipeline pass.
"""

from __future__ import annotations

from array import array

from ..params import (COUNT, MEMORY, NONRESOURCE, Config, EnumDomain,
                      IntRange, ParamSpec, Pow2Range)
from ..pipeline import Action, DataflowGraph
from ..structures import Cms, hash_key, replace_probability, row_seeds
from . import objectives
from .base import SketchProgram, digest, register

TRACKERS = ("cms", "precision", "plain")


class CacheState:
    def __init__(self, config: Config, seed: int):
        self.tracker = config["key_tracker"]
        self.tables = config["tables"]
        self.entries = config["entries"]
        self.timeout = config["timeout_ns"]
        self.threshold = config["promote_threshold"]
        self.seeds = row_seeds(seed, "cache.table", self.tables)
        self.keys: list[list[int | None]] = [[None] * self.entries for _ in range(self.tables)]
        self.times = [array("q", bytes(8 * self.entries)) for _ in range(self.tables)]
        self.counts = [array("Q", bytes(8 * self.entries)) for _ in range(self.tables)]
        self.cms = None
        if self.tracker == "cms":
            self.cms = Cms(config["cms_rows"], config["cms_cols"], seed, "cache.cms")


@register("cache")
class CacheProgram(SketchProgram):
    name = "cache"

    def __init__(self, trackers=TRACKERS, objective_kind=objectives.MISS_RATE,
                 entries_exp=(4, 11), cols_exp=(4, 12), tables_max=4, rows_max=5,
                 timeout_exp=(10, 30), threshold_max=32):
        for t in trackers:
            if t not in TRACKERS:
                raise ValueError(f"unknown tracker {t!r}")
        self.trackers = tuple(trackers)
        self.objective_kind = objective_kind
        self._specs = [
            ParamSpec("key_tracker", NONRESOURCE, EnumDomain(self.trackers)),
            # Resource scan order: memory widths first, then replication
            # counts; counts start at 1 so preprocessing bounds stay tight.
            ParamSpec("entries", MEMORY, Pow2Range(*entries_exp)),
            ParamSpec("cms_cols", MEMORY, Pow2Range(*cols_exp)),
            ParamSpec("tables", COUNT, IntRange(1, tables_max), start=1),
            ParamSpec("cms_rows", COUNT, IntRange(1, rows_max), start=1),
            ParamSpec("timeout_ns", NONRESOURCE, Pow2Range(*timeout_exp)),
            ParamSpec("promote_threshold", NONRESOURCE, IntRange(0, threshold_max)),
        ]

    def param_specs(self):
        return list(self._specs)

    def active_resource_names(self, selectors):
        if selectors.get("key_tracker") == "cms":
            return {"entries", "cms_cols", "tables", "cms_rows"}
        return {"entries", "tables"}

    def make_state(self, config, seed):
        return CacheState(config, seed)

    def handlers(self):
        return {"request": self.on_request, "cache_install": self.on_install}

    def on_request(self, state: CacheState, ev, run):
        key = ev.payload["key"]
        now = run.clock
        idxs = [hash_key(seed, key) % state.entries for seed in state.seeds]
        keys = state.keys
        for t, idx in enumerate(idxs):
            if keys[t][idx] == key:
                state.times[t][idx] = now
                if state.tracker == "precision":
                    state.counts[t][idx] += 1
                run.record("logHits", 1)
                return
        run.record("logHits", 0)
        for t, idx in enumerate(idxs):
            if keys[t][idx] is None:
                self._install(state, t, idx, key, now)
                return
        # Lazy timeout eviction: overwrite the stalest expired candidate.
        stalest = min(range(state.tables), key=lambda t: state.times[t][idxs[t]])
        if now - state.times[stalest][idxs[stalest]] > state.timeout:
            self._install(state, stalest, idxs[stalest], key, now)
            return
        if state.tracker == "cms":
            state.cms.update(key)
            if state.cms.query(key) > state.threshold:
                self._install(state, stalest, idxs[stalest], key, now)
                run.record("recirc")
                run.emit("cache_install", {"key": key})
        elif state.tracker == "precision":
            t_min = min(range(state.tables), key=lambda t: state.counts[t][idxs[t]])
            if run.rng.random() < replace_probability(state.counts[t_min][idxs[t_min]]):
                self._install(state, t_min, idxs[t_min], key, now)
                run.record("recirc")
                run.emit("cache_install", {"key": key})
        else:  # plain: evict on collision, no recirculation needed
            self._install(state, stalest, idxs[stalest], key, now)

    @staticmethod
    def _install(state: CacheState, t: int, idx: int, key: int, now: int):
        state.keys[t][idx] = key
        state.times[t][idx] = now
        state.counts[t][idx] = 1

    def on_install(self, state, ev, run):
        # Second pipeline pass of a promoted request; the table write already
        # happened when the promotion was decided.
        pass

    def footprint(self, config: Config) -> DataflowGraph:
        tracker = config["key_tracker"]
        if tracker not in TRACKERS:
            raise ValueError(f"config selects undeclared tracker branch {tracker!r}")
        tables = config["tables"]
        entries = config["entries"]
        actions = [
            Action(f"cache_{t}", frozenset(), (f"cache_arr_{t}", entries), 1, 1)
            for t in range(tables)
        ]
        if tracker == "cms":
            lookup_ids = frozenset(a.id for a in actions)
            for j in range(config["cms_rows"]):
                actions.append(Action(f"cms_{j}", lookup_ids, (f"cms_arr_{j}", config["cms_cols"]), 1, 1))
        elif tracker == "precision":
            for t in range(tables):
                actions.append(Action(f"count_{t}", frozenset({f"cache_{t}"}), (f"count_arr_{t}", entries), 0, 1))
        return DataflowGraph.of(actions)

    def objective(self, sink, config):
        return objectives.objective_score(self.objective_kind, sink, config)

    def state_digest(self, state: CacheState) -> str:
        parts = (
            tuple(tuple(way) for way in state.keys),
            tuple(bytes(way) for way in state.times),
            tuple(bytes(way) for way in state.counts),
            state.cms.state_tuple() if state.cms else None,
        )
        return digest(parts)
