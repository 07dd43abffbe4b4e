"""End-to-end tuning loop: preprocess, search, simulate, score, verify, rank.

One master seed drives everything through domain-separated derivation:
trace simulation, structure hashing, and strategy randomness each get their
own stream, so a (manifest, seed) pair pins the whole run. The wall-clock
budget covers the search phase only and is checked between iterations; an
in-flight simulation always completes, and the first iteration always runs.

Ranked results are layout-verified top-down before being returned: the
default verifier replays the same greedy layout (so it accepts everything
the compiling space produced), but an injected verifier - e.g. a real
hardware compiler wrapper - can reject entries, in which case the next best
is tried, and if nothing verifies the search is repeated with the rejected
resource configurations excluded.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .errors import DomainFailure
from .params import Config
from .pipeline import PipelineModel, layout
from .preprocess import CompilingSpace, entry_key, enumerate_compiling
from .search import History, Lattice, make_strategy
from .sim import DEFAULT_RECIRC_DELAY_NS, Trace, simulate_trace
from .structures import derive_seed


@dataclass
class RankedEntry:
    config: Config
    score: float
    verified: bool = False


@dataclass
class RankedResults:
    """Evaluated configurations sorted ascending by score; the winner is the
    best-scoring entry that passed layout verification."""

    entries: list[RankedEntry]
    budget_used: float = 0.0
    iterations: int = 0
    restarts: int = 0

    @property
    def winner(self) -> RankedEntry:
        for e in self.entries:
            if e.verified:
                return e
        raise DomainFailure("no verified entry in results")


@dataclass
class RestartDirective:
    """Nothing verified: repeat the search excluding these resource configs."""

    excluded: set[str] = field(default_factory=set)


def evaluate_config(program, config: Config, trace: Trace, seed: int, *,
                    recirc_delay_ns: int = DEFAULT_RECIRC_DELAY_NS) -> float:
    """Simulate one concrete program on the trace and score its sink."""
    sink = simulate_trace(program, config, trace, seed, recirc_delay_ns=recirc_delay_ns)
    return program.objective(sink, config)


def default_verifier(program, config: Config, pipe: PipelineModel) -> bool:
    """Strongest in-process layout check; hook point for an external compiler."""
    return layout(program.footprint(config), pipe, "greedy").fits


def _resource_key(program, config: Config) -> str:
    """Canonical key of the selector+resource part: the unit of exclusion."""
    names = [s.name for s in program.selector_specs()] + [s.name for s in program.resource_specs()]
    return entry_key({n: config[n] for n in names})


def verify_and_rank(history: History, program, pipe: PipelineModel,
                    verifier=None) -> RankedResults | RestartDirective:
    """Sort evaluations ascending and verify from the top until one passes.

    Entries ranked above the first verified one keep verified=False. If no
    entry verifies, returns a restart directive carrying every rejected
    resource configuration.
    """
    if len(history) == 0:
        raise ValueError("empty history")
    verify = verifier or default_verifier
    best_by_config: dict[str, RankedEntry] = {}
    for config, score in zip(history.configs, history.scores):
        key = config.canonical_text()
        if key not in best_by_config or score < best_by_config[key].score:
            best_by_config[key] = RankedEntry(config, score)
    entries = sorted(best_by_config.values(),
                     key=lambda e: (e.score, e.config.canonical_text()))
    for entry in entries:
        if verify(program, entry.config, pipe):
            entry.verified = True
            return RankedResults(entries)
    return RestartDirective({_resource_key(program, e.config) for e in entries})


@dataclass
class OptimizeOutcome:
    results: RankedResults
    space: CompilingSpace
    strategy: str
    seed: int
    budget_secs: float


# Per-process state for the exhaustive fan-out: the trace and program are
# shipped once per worker instead of once per task.
_worker_args = {}


def _init_worker(program, trace, sim_seed, recirc_delay_ns):
    _worker_args["ctx"] = (program, trace, sim_seed, recirc_delay_ns)


def _worker_eval(config: Config) -> float:
    program, trace, sim_seed, recirc_delay_ns = _worker_args["ctx"]
    return evaluate_config(program, config, trace, sim_seed,
                           recirc_delay_ns=recirc_delay_ns)


def optimize(program, train_trace: Trace, pipe: PipelineModel, strategy: str,
             budget_secs: float, seed: int, *, heuristic: str = "greedy",
             recirc_delay_ns: int = DEFAULT_RECIRC_DELAY_NS, verifier=None,
             workers: int = 1, max_restarts: int = 8) -> OptimizeOutcome:
    """Run the full tuning pipeline within a search-phase time budget."""
    if budget_secs <= 0:
        raise ValueError("budget must be positive")
    space = enumerate_compiling(program, pipe, heuristic)
    nr_specs = program.search_specs()
    sim_seed = derive_seed(seed, "sim")
    score_cache: dict[str, float] = {}
    excluded: set[str] = set()
    started = time.monotonic()
    deadline = started + budget_secs
    total_iterations = 0
    restarts = 0
    pool = None
    if workers > 1 and strategy == "exhaustive":
        import concurrent.futures

        pool = concurrent.futures.ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker,
            initargs=(program, train_trace, sim_seed, recirc_delay_ns))

    try:
        while True:
            subspace = space.without(excluded) if excluded else space
            if len(subspace) == 0:
                raise DomainFailure("every compiling configuration was excluded by verification")
            lattice = Lattice(subspace, nr_specs)
            strat = make_strategy(strategy, lattice, derive_seed(seed, f"search.{restarts}"))
            history = History()
            while True:
                if len(history) > 0 and time.monotonic() >= deadline:
                    break
                point = strat.next_point(history)
                if point is None:
                    break
                # Exhaustive proposals are independent of history, so a batch
                # of them can be pulled at once and fanned out.
                batch = [point]
                if pool is not None:
                    while len(batch) < workers:
                        extra = strat.next_point(history)
                        if extra is None:
                            break
                        batch.append(extra)
                configs = [lattice.decode(p) for p in batch]
                scores = _evaluate_batch(configs, score_cache, pool, program,
                                         train_trace, sim_seed, recirc_delay_ns)
                for p, config, score in zip(batch, configs, scores):
                    score_cache[config.canonical_text()] = score
                    history.record(p, score, config)
            total_iterations += len(history)
            if len(history) == 0:
                raise DomainFailure("budget expired before any iteration completed")
            outcome = verify_and_rank(history, program, pipe, verifier)
            if isinstance(outcome, RestartDirective):
                excluded |= outcome.excluded
                restarts += 1
                if restarts > max_restarts:
                    raise DomainFailure("no configuration verified after repeated restarts")
                continue
            outcome.budget_used = time.monotonic() - started
            outcome.iterations = total_iterations
            outcome.restarts = restarts
            return OptimizeOutcome(outcome, space, strategy, seed, budget_secs)
    finally:
        if pool is not None:
            pool.shutdown()


def _evaluate_batch(configs, score_cache, pool, program, trace, sim_seed,
                    recirc_delay_ns) -> list[float]:
    scores: list[float | None] = [score_cache.get(c.canonical_text()) for c in configs]
    missing = [i for i, s in enumerate(scores) if s is None]
    if not missing:
        return scores
    if pool is not None and len(missing) > 1:
        futures = [pool.submit(_worker_eval, configs[i]) for i in missing]
        for i, fut in zip(missing, futures):
            scores[i] = fut.result()
    else:
        for i in missing:
            scores[i] = evaluate_config(program, configs[i], trace, sim_seed,
                                        recirc_delay_ns=recirc_delay_ns)
    return scores


def build_report(app_name: str, outcome: OptimizeOutcome, pipe: PipelineModel,
                 extra: dict | None = None) -> dict:
    """Machine-readable run report; embeds the manifest so every number in it
    can be reproduced from the report alone."""
    results = outcome.results
    report = {
        "app": app_name,
        "strategy": outcome.strategy,
        "seed": outcome.seed,
        "budget": outcome.budget_secs,
        "iterations": results.iterations,
        "entries": [
            {"config": dict(sorted(e.config.assignments.items())),
             "score": e.score,
             "verified": e.verified}
            for e in results.entries
        ],
        "preprocess": {
            "space_size": outcome.space.size,
            "heuristic_calls": outcome.space.heuristic_calls,
        },
        "pipeline": {
            "stages": pipe.stages,
            "sram_words_per_stage": pipe.sram_words_per_stage,
            "hash_units_per_stage": pipe.hash_units_per_stage,
            "alu_slots_per_stage": pipe.alu_slots_per_stage,
            "hash": pipe.digest(),
        },
    }
    if extra:
        report.update(extra)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
