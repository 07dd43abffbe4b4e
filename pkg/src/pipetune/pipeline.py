"""Switch-pipeline resource model and stage-layout heuristics.

A program's resource demand is a :class:`DataflowGraph` of actions; each
action may own a register array, consume hash units and ALU slots, and
depend on other actions. :func:`layout` decides whether the graph fits a
:class:`PipelineModel` under one of two heuristics:

* ``dataflow`` only respects dependencies: two actions cannot share a stage
  if one depends on the other, so the graph fits iff its longest dependency
  path is no longer than the pipeline.
* ``greedy`` additionally tracks per-stage SRAM, hash units, array accesses,
  and ALU slots, placing actions first-fit in a deterministic topological
  order. An array resides in exactly one stage and every action touching it
  must land there.

Both can only underestimate demand, so greedy acceptance implies dataflow
acceptance; greedy is the default check everywhere else in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class GraphError(ValueError):
    """Cyclic dependencies or references to unknown actions/arrays."""


@dataclass(frozen=True)
class PipelineModel:
    stages: int = 12
    sram_words_per_stage: int = 4096
    hash_units_per_stage: int = 6
    alu_slots_per_stage: int = 8

    def __post_init__(self):
        for name in ("stages", "sram_words_per_stage", "hash_units_per_stage", "alu_slots_per_stage"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def to_text(self) -> str:
        return (
            f"stages={self.stages}\n"
            f"sram_words_per_stage={self.sram_words_per_stage}\n"
            f"hash_units_per_stage={self.hash_units_per_stage}\n"
            f"alu_slots_per_stage={self.alu_slots_per_stage}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "PipelineModel":
        fields = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            fields[key.strip()] = int(value)
        return cls(**fields)

    @classmethod
    def from_file(cls, path) -> "PipelineModel":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def digest(self) -> str:
        import hashlib

        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Action:
    """One per-packet processing step: optional array access plus compute."""

    id: str
    deps: frozenset[str] = frozenset()
    array: tuple[str, int] | None = None  # (array id, width in words)
    hash_units: int = 0
    alu_slots: int = 0

    def __post_init__(self):
        if self.hash_units < 0 or self.alu_slots < 0:
            raise ValueError(f"action {self.id!r}: negative resource demand")
        if self.array is not None and self.array[1] < 1:
            raise ValueError(f"action {self.id!r}: array width must be >= 1")


@dataclass(frozen=True)
class DataflowGraph:
    actions: tuple[Action, ...]

    @classmethod
    def of(cls, actions) -> "DataflowGraph":
        return cls(tuple(actions))

    def total_sram_words(self) -> int:
        widths = {a.array[0]: a.array[1] for a in self.actions if a.array}
        return sum(widths.values())

    def total_hash_units(self) -> int:
        return sum(a.hash_units for a in self.actions)

    def total_alu_slots(self) -> int:
        return sum(a.alu_slots for a in self.actions)

    def longest_path(self) -> int:
        depth = _levelize(self.actions)
        return max(depth.values()) if depth else 0

    def to_text(self) -> str:
        lines = []
        for a in self.actions:
            deps = ",".join(sorted(a.deps))
            arr = f"{a.array[0]}:{a.array[1]}" if a.array else "-"
            lines.append(f"action {a.id} deps={deps} array={arr} hash={a.hash_units} alu={a.alu_slots}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DataflowGraph":
        actions = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] != "action" or len(parts) != 6:
                raise ValueError(f"bad action line: {line!r}")
            fields = dict(p.split("=", 1) for p in parts[2:])
            deps = frozenset(d for d in fields["deps"].split(",") if d)
            array = None
            if fields["array"] != "-":
                arr_id, _, width = fields["array"].partition(":")
                array = (arr_id, int(width))
            actions.append(Action(parts[1], deps, array, int(fields["hash"]), int(fields["alu"])))
        return cls(tuple(actions))


@dataclass(frozen=True)
class FitResult:
    fits: bool
    assignment: dict[str, int] | None = None  # action id -> 1-based stage
    reason: str | None = None


def _levelize(actions) -> dict[str, int]:
    """Earliest dependency-feasible stage per action; raises GraphError on bad graphs."""
    by_id = {a.id: a for a in actions}
    if len(by_id) != len(actions):
        raise GraphError("duplicate action ids")
    for a in actions:
        for d in a.deps:
            if d not in by_id:
                raise GraphError(f"action {a.id!r} depends on unknown action {d!r}")
    depth: dict[str, int] = {}

    def visit(aid: str, pending: tuple[str, ...]):
        if aid in depth:
            return depth[aid]
        if aid in pending:
            raise GraphError(f"dependency cycle through {aid!r}")
        a = by_id[aid]
        d = 1 + max((visit(dep, pending + (aid,)) for dep in a.deps), default=0)
        depth[aid] = d
        return d

    for a in actions:
        visit(a.id, ())
    return depth


def _topo_order(actions) -> list[Action]:
    """Kahn's algorithm; the ready set is drained in lexicographic id order."""
    by_id = {a.id: a for a in actions}
    remaining = {a.id: set(a.deps) for a in actions}
    order = []
    ready = sorted(aid for aid, deps in remaining.items() if not deps)
    dependents: dict[str, list[str]] = {aid: [] for aid in by_id}
    for a in actions:
        for d in a.deps:
            dependents[d].append(a.id)
    while ready:
        aid = ready.pop(0)
        del remaining[aid]
        order.append(by_id[aid])
        freed = []
        for child in dependents[aid]:
            remaining[child].discard(aid)
            if not remaining[child]:
                freed.append(child)
        if freed:
            ready = sorted(ready + freed)
    if remaining:
        raise GraphError("dependency cycle")
    return order


def layout(dfg: DataflowGraph, pipe: PipelineModel, heuristic: str = "greedy") -> FitResult:
    """Decide whether the graph fits the pipeline; pure in all arguments."""
    if heuristic == "dataflow":
        return _layout_dataflow(dfg, pipe)
    if heuristic == "greedy":
        return _layout_greedy(dfg, pipe)
    raise ValueError(f"unknown heuristic {heuristic!r}")


def _layout_dataflow(dfg: DataflowGraph, pipe: PipelineModel) -> FitResult:
    depth = _levelize(dfg.actions)
    deepest = max(depth.values(), default=0)
    if deepest > pipe.stages:
        return FitResult(False, None, f"dependency path of length {deepest} exceeds {pipe.stages} stages")
    return FitResult(True, depth)


def _layout_greedy(dfg: DataflowGraph, pipe: PipelineModel) -> FitResult:
    order = _topo_order(dfg.actions)
    sram = [pipe.sram_words_per_stage] * (pipe.stages + 1)  # 1-based
    hashes = [pipe.hash_units_per_stage] * (pipe.stages + 1)
    alus = [pipe.alu_slots_per_stage] * (pipe.stages + 1)
    array_stage: dict[str, int] = {}
    assignment: dict[str, int] = {}

    for a in order:
        min_stage = 1 + max((assignment[d] for d in a.deps), default=0)
        if a.array is not None and a.array[0] in array_stage:
            # The array is already resident; this action must land with it.
            s = array_stage[a.array[0]]
            if s < min_stage:
                return FitResult(False, None, f"array {a.array[0]!r} pinned to stage {s} before its dependent access {a.id!r}")
            if hashes[s] < a.hash_units or alus[s] < a.alu_slots:
                return FitResult(False, None, f"no compute left in stage {s} for {a.id!r}")
            hashes[s] -= a.hash_units
            alus[s] -= a.alu_slots
            assignment[a.id] = s
            continue
        width = a.array[1] if a.array else 0
        placed = False
        for s in range(min_stage, pipe.stages + 1):
            if sram[s] >= width and hashes[s] >= a.hash_units and alus[s] >= a.alu_slots:
                sram[s] -= width
                hashes[s] -= a.hash_units
                alus[s] -= a.alu_slots
                if a.array is not None:
                    array_stage[a.array[0]] = s
                assignment[a.id] = s
                placed = True
                break
        if not placed:
            return FitResult(False, None, f"no stage can host {a.id!r} (needs {width} words, {a.hash_units} hash, {a.alu_slots} alu from stage {min_stage})")
    return FitResult(True, assignment)


def default_pipeline() -> PipelineModel:
    return PipelineModel()
