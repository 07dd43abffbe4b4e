"""Command-line client for the tuning service.

Every subcommand builds a JSON request and sends it to the service API. By
default the service runs in-process (no daemon needed); pass --server to
talk to a remote instance started with `pipetune serve`, in which case
trace paths are resolved on the server host.

Exit codes: 0 success, 1 usage error, 2 domain error (invalid config,
empty compiling space, unusable trace).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

USAGE_EXIT = 1
DOMAIN_EXIT = 2


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; usage errors are exit 1 here.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message, USAGE_EXIT)


def _request(server: str | None, path: str, body: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(path, json=body)
    else:
        from .service import create_app

        async def _call():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(transport=transport, timeout=None,
                                         base_url="http://pipetune.local") as client:
                return await client.post(path, json=body)

        resp = asyncio.run(_call())
    if resp.status_code == 200:
        return resp.json()
    detail = resp.json().get("detail", {})
    kind = detail.get("error") if isinstance(detail, dict) else None
    message = detail.get("detail") if isinstance(detail, dict) else str(detail)
    raise CliError(message or f"HTTP {resp.status_code}", DOMAIN_EXIT if kind == "domain" else USAGE_EXIT)


def _pipeline_body(path: str | None) -> dict:
    if path is None:
        return {}
    from .pipeline import PipelineModel

    try:
        pipe = PipelineModel.from_file(path)
    except FileNotFoundError:
        raise CliError(f"pipeline file not found: {path}", USAGE_EXIT) from None
    except (ValueError, TypeError) as exc:
        raise CliError(f"bad pipeline file: {exc}", USAGE_EXIT) from None
    return {"pipeline": {"stages": pipe.stages,
                         "sram_words_per_stage": pipe.sram_words_per_stage,
                         "hash_units_per_stage": pipe.hash_units_per_stage,
                         "alu_slots_per_stage": pipe.alu_slots_per_stage}}


def _read_config(path: str) -> dict:
    from .params import parse_config_text

    try:
        with open(path) as fh:
            return dict(parse_config_text(fh.read()).assignments)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}", USAGE_EXIT) from None
    except ValueError as exc:
        raise CliError(f"bad config file {path}: {exc}", USAGE_EXIT) from None


def build_parser() -> _Parser:
    parser = _Parser(prog="pipetune", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--server", help="base URL of a running pipetune service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic trace CSV")
    gen.add_argument("--kind", default="zipf", choices=["zipf", "zipf_requests", "reqresp", "request_response"])
    gen.add_argument("--preset", default="uniform", choices=["high", "moderate", "uniform"])
    gen.add_argument("--keys", type=int, default=10_000)
    gen.add_argument("--events", type=int, default=100_000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--spacing-ns", type=int, default=100)
    gen.add_argument("--delay-mu", type=float, default=10.0)
    gen.add_argument("--delay-sigma", type=float, default=1.5)
    gen.add_argument("-o", "--out", required=True)

    pre = sub.add_parser("preprocess", help="enumerate the compiling space")
    pre.add_argument("--app", required=True)
    pre.add_argument("--pipeline", help="pipeline model key=value file")
    pre.add_argument("--heuristic", default="greedy", choices=["greedy", "dataflow"])
    pre.add_argument("-o", "--out", help="write the space as CSV")

    simp = sub.add_parser("simulate", help="simulate one concrete config on a trace")
    simp.add_argument("--app", required=True)
    simp.add_argument("--config", required=True, help="flat key=value config file")
    simp.add_argument("--trace", required=True)
    simp.add_argument("--seed", type=int, default=0)
    simp.add_argument("--objective", help="cache only: miss_rate or network_cost")
    simp.add_argument("--recirc-delay", type=int, default=1000)
    simp.add_argument("--sink-out", help="write the measurement sink as JSON")

    opt = sub.add_parser("optimize", help="run the full tuning pipeline")
    opt.add_argument("--app", required=True)
    opt.add_argument("--strategy", default="bayesian",
                     choices=["exhaustive", "simanneal", "neldermead", "bayesian", "all"])
    opt.add_argument("--budget", type=float, default=120.0, help="search budget in seconds")
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--train", required=True)
    opt.add_argument("--test", help="held-out trace to score the winner on")
    opt.add_argument("--objective", help="cache only: miss_rate or network_cost")
    opt.add_argument("--pipeline", help="pipeline model key=value file")
    opt.add_argument("--recirc-delay", type=int, default=1000)
    opt.add_argument("--workers", type=int, default=1, help="process fan-out (exhaustive only)")
    opt.add_argument("-o", "--out", required=True, help="report JSON path")

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_gen(args) -> int:
    body = {"kind": args.kind, "preset": args.preset, "keys": args.keys,
            "events": args.events, "seed": args.seed, "spacing_ns": args.spacing_ns,
            "delay_mu": args.delay_mu, "delay_sigma": args.delay_sigma,
            "out_path": args.out}
    out = _request(args.server, "/traces/generate", body)
    print(f"wrote {out['events']} events to {out['path']} (span {out['span_ns']} ns)")
    return 0


def _cmd_preprocess(args) -> int:
    body = {"app": args.app, "heuristic": args.heuristic, "out_csv": args.out}
    body.update(_pipeline_body(args.pipeline))
    out = _request(args.server, "/preprocess", body)
    print(f"{out['app']}: {out['space_size']} compiling configs "
          f"(grid {out['grid_size']}, {out['reduction_pct']}% pruned, "
          f"{out['heuristic_calls']} heuristic calls)")
    if args.out:
        print(f"space written to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    body = {"app": args.app, "config": _read_config(args.config), "trace_path": args.trace,
            "seed": args.seed, "objective": args.objective,
            "recirc_delay_ns": args.recirc_delay, "sink_out": args.sink_out}
    out = _request(args.server, "/simulate", body)
    print(f"score={out['score']} events={out['events']} emitted={out['emitted']}")
    return 0


def _cmd_optimize(args) -> int:
    body = {"app": args.app, "strategy": args.strategy, "budget_secs": args.budget,
            "seed": args.seed, "train_path": args.train, "test_path": args.test,
            "objective": args.objective, "recirc_delay_ns": args.recirc_delay,
            "workers": args.workers}
    body.update(_pipeline_body(args.pipeline))
    out = _request(args.server, "/optimize", body)
    report = out["report"]
    from .optimizer import report_json

    with open(args.out, "w") as fh:
        fh.write(report_json(report))
    top = report["entries"][0]
    print(f"best score {top['score']} in {report['iterations']} iterations; report: {args.out}")
    if "test" in report:
        print(f"test score: {report['test']['score']}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"gen": _cmd_gen, "preprocess": _cmd_preprocess,
                   "simulate": _cmd_simulate, "optimize": _cmd_optimize,
                   "serve": _cmd_serve}[args.command]
        return handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
