"""FastAPI service wrapping the tuning engine.

The service owns the heavy work (generation, preprocessing, simulation,
optimization); clients talk JSON. Trace files are read and written on the
service host, so requests reference server-side paths; reports and scores
are returned inline. The bundled CLI is a thin client of this API and runs
it in-process by default.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..apps import get_program, make_program, registered_apps
from ..errors import DomainFailure
from ..optimizer import build_report, evaluate_config, optimize
from ..pipeline import PipelineModel
from ..preprocess import enumerate_compiling
from ..search import STRATEGIES
from ..sim import run_trace
from ..structures import derive_seed
from ..traces import WorkloadSpec, gen_trace, parse_trace_csv, write_trace_csv
from . import schemas

KIND_ALIASES = {"zipf": "zipf_requests", "zipf_requests": "zipf_requests",
                "reqresp": "request_response", "request_response": "request_response"}


def _usage(detail: str):
    return HTTPException(status_code=400, detail={"error": "usage", "detail": detail})


def _domain(detail: str):
    return HTTPException(status_code=422, detail={"error": "domain", "detail": detail})


def _pipe(spec: schemas.PipelineSpec) -> PipelineModel:
    return PipelineModel(spec.stages, spec.sram_words_per_stage,
                         spec.hash_units_per_stage, spec.alu_slots_per_stage)


def _load_trace(path: str):
    try:
        return parse_trace_csv(path)
    except FileNotFoundError:
        raise _usage(f"trace file not found: {path}") from None
    except ValueError as exc:
        raise _usage(str(exc)) from None


def create_app() -> FastAPI:
    app = FastAPI(title="pipetune", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/apps")
    def apps():
        return {"apps": registered_apps(), "strategies": list(STRATEGIES) + ["all"]}

    @app.post("/traces/generate", response_model=schemas.GenerateResponse)
    def generate(req: schemas.GenerateRequest):
        kind = KIND_ALIASES.get(req.kind)
        if kind is None:
            raise _usage(f"unknown workload kind {req.kind!r}")
        try:
            spec = WorkloadSpec(kind=kind, n_keys=req.keys, n_events=req.events,
                                skew=req.preset, seed=req.seed, spacing_ns=req.spacing_ns,
                                delay_mu=req.delay_mu, delay_sigma=req.delay_sigma)
        except ValueError as exc:
            raise _usage(str(exc)) from None
        trace = gen_trace(spec)
        write_trace_csv(trace, req.out_path)
        span = trace[len(trace) - 1].time if len(trace) else 0
        return schemas.GenerateResponse(path=req.out_path, events=len(trace), span_ns=span)

    @app.post("/preprocess", response_model=schemas.PreprocessResponse)
    def preprocess(req: schemas.PreprocessRequest):
        try:
            program = get_program(req.app)
        except KeyError as exc:
            raise _usage(str(exc)) from None
        if req.heuristic not in ("greedy", "dataflow"):
            raise _usage(f"unknown heuristic {req.heuristic!r}")
        try:
            space = enumerate_compiling(program, _pipe(req.pipeline), req.heuristic)
        except DomainFailure as exc:
            raise _domain(str(exc)) from None
        if req.out_csv:
            with open(req.out_csv, "w") as fh:
                fh.write(space.to_csv_text())
        reduction = 100.0 * (1.0 - space.size / space.grid_size) if space.grid_size else 0.0
        return schemas.PreprocessResponse(
            app=req.app, heuristic=req.heuristic, space_size=space.size,
            heuristic_calls=space.heuristic_calls, grid_size=space.grid_size,
            reduction_pct=round(reduction, 4), csv_path=req.out_csv)

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        from ..params import Config, validate_config

        try:
            program = make_program(req.app, req.objective)
        except (KeyError, ValueError) as exc:
            raise _usage(str(exc)) from None
        trace = _load_trace(req.trace_path)
        config = Config(dict(req.config))
        violations = validate_config(program.param_specs(), config)
        if violations:
            raise _domain("; ".join(f"{v.name}: {v.reason}" for v in violations))
        run = run_trace(program, config, trace, derive_seed(req.seed, "sim"),
                        recirc_delay_ns=req.recirc_delay_ns)
        try:
            score = program.objective(run.sink, config)
        except DomainFailure as exc:
            raise _domain(str(exc)) from None
        if req.sink_out:
            with open(req.sink_out, "w") as fh:
                fh.write(run.sink.to_json_text())
        return schemas.SimulateResponse(app=req.app, score=score, events=run.dispatched,
                                        emitted=run.emitted, sink_path=req.sink_out)

    @app.post("/optimize", response_model=schemas.OptimizeResponse)
    def run_optimize(req: schemas.OptimizeRequest):
        try:
            program = make_program(req.app, req.objective)
        except (KeyError, ValueError) as exc:
            raise _usage(str(exc)) from None
        if req.strategy != "all" and req.strategy not in STRATEGIES:
            raise _usage(f"unknown strategy {req.strategy!r}")
        if req.budget_secs <= 0:
            raise _usage("budget must be positive")
        pipe = _pipe(req.pipeline)
        train = _load_trace(req.train_path)
        strategies = list(STRATEGIES) if req.strategy == "all" else [req.strategy]
        budget_each = req.budget_secs / len(strategies)
        outcomes = []
        try:
            for name in strategies:
                outcomes.append(optimize(
                    program, train, pipe, name, budget_each, req.seed,
                    recirc_delay_ns=req.recirc_delay_ns, workers=req.workers))
        except DomainFailure as exc:
            raise _domain(str(exc)) from None
        best = min(outcomes, key=lambda o: o.results.winner.score)
        extra = {
            "objective": req.objective or getattr(program, "objective_kind", program.name),
            "train_trace": req.train_path,
        }
        if req.strategy == "all":
            extra["strategy_scores"] = {
                o.strategy: o.results.winner.score for o in outcomes}
        if req.test_path:
            test = _load_trace(req.test_path)
            try:
                test_score = evaluate_config(program, best.results.winner.config, test,
                                             derive_seed(req.seed, "sim"),
                                             recirc_delay_ns=req.recirc_delay_ns)
            except DomainFailure as exc:
                raise _domain(str(exc)) from None
            extra["test"] = {"trace": req.test_path, "score": test_score}
        return schemas.OptimizeResponse(report=build_report(req.app, best, pipe, extra))

    return app
