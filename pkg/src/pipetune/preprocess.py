"""Phase-1 preprocessing: enumerate every resource configuration the layout
heuristic accepts, without user-provided bounds.

Resource parameters are processed in declaration order. For each valid
combination of already-processed parameters, the next parameter is scanned
upward from its domain minimum (doubling through power-of-two domains) with
all unprocessed parameters resting at their starting values, until the
footprint stops fitting; demand monotonicity makes the last fitting value an
upper bound. Leaves of the resulting tree are complete resource assignments,
and the scan of the final parameter tests each leaf directly.

Boolean/enum structure selectors multiply the tree: preprocessing runs once
per branch and concatenates the results. Resource parameters that a branch
does not use are pinned to their domain minimum in that branch's configs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import EmptyCompilingSpace
from .params import Config, ParamSpec, Value, default_start, format_value
from .pipeline import PipelineModel, layout


@dataclass
class CompilingSpace:
    """Ordered, indexable set of accepted resource configurations."""

    param_names: list[str]                  # selector names then resource names
    entries: list[dict[str, Value]] = field(default_factory=list)
    heuristic: str = "greedy"
    heuristic_calls: int = 0
    grid_size: int = 0                      # bounded-grid points the scan avoided testing

    @property
    def size(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i: int) -> dict[str, Value]:
        return self.entries[i]

    def without(self, excluded_keys: set[str]) -> "CompilingSpace":
        """Copy of this space minus entries whose canonical key is excluded."""
        kept = [e for e in self.entries if entry_key(e) not in excluded_keys]
        return CompilingSpace(self.param_names, kept, self.heuristic,
                              self.heuristic_calls, self.grid_size)

    def to_csv_text(self) -> str:
        lines = ["index," + ",".join(self.param_names)]
        for i, entry in enumerate(self.entries):
            lines.append(f"{i}," + ",".join(format_value(entry[n]) for n in self.param_names))
        return "\n".join(lines) + "\n"


def entry_key(entry: dict[str, Value]) -> str:
    return ";".join(f"{n}={format_value(entry[n])}" for n in sorted(entry))


class _HeuristicCounter:
    def __init__(self, program, pipe: PipelineModel, heuristic: str):
        self.program = program
        self.pipe = pipe
        self.heuristic = heuristic
        self.calls = 0

    def fits(self, assignment: dict[str, Value]) -> bool:
        self.calls += 1
        dfg = self.program.footprint(Config(assignment))
        return layout(dfg, self.pipe, self.heuristic).fits


def _resting_values(program, pipe, active_names: set[str]) -> dict[str, Value]:
    """Starting values for every parameter not yet fixed by the scan."""
    resting: dict[str, Value] = {}
    for spec in program.param_specs():
        if spec.is_selector:
            continue
        if spec.is_resource and spec.name in active_names:
            resting[spec.name] = default_start(spec, pipe)
        else:
            # Inactive resource params and nonresource params do not affect
            # the footprint; pin them to the domain minimum.
            resting[spec.name] = spec.domain.minimum
    return resting


def upper_bound_scan(program, pipe: PipelineModel, fixed: dict[str, Value],
                     target: ParamSpec, heuristic: str = "greedy",
                     _checker: _HeuristicCounter | None = None) -> Value | None:
    """Largest domain value of ``target`` whose footprint still fits, given
    the fixed assignments, with every unprocessed parameter at its starting
    value. Returns None when even the domain minimum fails."""
    checker = _checker or _HeuristicCounter(program, pipe, heuristic)
    selectors = {s.name: fixed[s.name] for s in program.selector_specs()}
    active = program.active_resource_names(selectors)
    resting = _resting_values(program, pipe, active)
    best = None
    for value in target.domain.values():
        assignment = dict(resting)
        assignment.update(fixed)
        assignment[target.name] = value
        if not checker.fits(assignment):
            break
        best = value
    return best


def enumerate_compiling(program, pipe: PipelineModel, heuristic: str = "greedy") -> CompilingSpace:
    """Enumerate the compiling space for every selector branch of a program."""
    selector_specs = program.selector_specs()
    resource_specs = program.resource_specs()
    if not resource_specs:
        raise ValueError(f"{program.name!r} declares no resource parameters")
    names = [s.name for s in selector_specs] + [s.name for s in resource_specs]
    checker = _HeuristicCounter(program, pipe, heuristic)
    space = CompilingSpace(param_names=names, heuristic=heuristic)

    branch_values = [list(s.domain.values()) for s in selector_specs]
    for combo in itertools.product(*branch_values) if branch_values else [()]:
        selectors = dict(zip((s.name for s in selector_specs), combo))
        active = program.active_resource_names(selectors)
        active_specs = [s for s in resource_specs if s.name in active]
        inactive = {s.name: s.domain.minimum for s in resource_specs if s.name not in active}
        grid = 1
        for s in active_specs:
            grid *= s.domain.size
        space.grid_size += grid

        def descend(prefix: dict[str, Value], remaining: list[ParamSpec]):
            if not remaining:
                space.entries.append({**selectors, **inactive, **prefix})
                return
            target = remaining[0]
            bound = upper_bound_scan(program, pipe, {**selectors, **inactive, **prefix},
                                     target, heuristic, _checker=checker)
            if bound is None:
                return
            for value in target.domain.values():
                descend({**prefix, target.name: value}, remaining[1:])
                if value == bound:
                    break

        if active_specs:
            descend({}, active_specs)
        elif checker.fits({**selectors, **inactive,
                           **_resting_values(program, pipe, set())}):
            space.entries.append({**selectors, **inactive})

    space.heuristic_calls = checker.calls
    if not space.entries:
        raise EmptyCompilingSpace(
            f"{program.name!r} does not fit the pipeline at any resource setting")
    return space


def brute_force_space(program, pipe: PipelineModel, heuristic: str = "greedy") -> list[dict[str, Value]]:
    """Oracle: filter the full bounded grid through the same heuristic.

    Exponential in parameter count; only usable on small domains. Entries
    come out in the same branch-major, declaration-ordered sequence as
    enumerate_compiling so the two can be compared directly.
    """
    selector_specs = program.selector_specs()
    resource_specs = program.resource_specs()
    checker = _HeuristicCounter(program, pipe, heuristic)
    accepted = []
    branch_values = [list(s.domain.values()) for s in selector_specs]
    for combo in itertools.product(*branch_values) if branch_values else [()]:
        selectors = dict(zip((s.name for s in selector_specs), combo))
        active = program.active_resource_names(selectors)
        active_specs = [s for s in resource_specs if s.name in active]
        inactive = {s.name: s.domain.minimum for s in resource_specs if s.name not in active}
        nonresource = {s.name: s.domain.minimum for s in program.param_specs()
                       if not s.is_resource and not s.is_selector}
        for values in itertools.product(*(list(s.domain.values()) for s in active_specs)):
            assignment = {**selectors, **inactive, **nonresource,
                          **dict(zip((s.name for s in active_specs), values))}
            if checker.fits(assignment):
                accepted.append({k: assignment[k] for k in
                                 [s.name for s in selector_specs] + [s.name for s in resource_specs]})
    return accepted
