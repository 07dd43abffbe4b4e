"""Synthetic workload generation, trace CSV format, and train/test splitting.

Zipf request workloads are specified by their top-10 key share rather than
an exponent: the exponent is solved numerically so the expected share of the
ten most popular keys matches the preset (0.58 high, 0.15 moderate, uniform
otherwise). Request/response workloads pair every request with one response
after a log-normal delay, giving RTT samplers a heavy tail to chase.

CSV format, header-less and integer-only::

    time,event_name,field=value[,field=value...]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim import Event, Trace

ZIPF_REQUESTS = "zipf_requests"
REQUEST_RESPONSE = "request_response"

TOP10_TARGETS = {"high": 0.58, "moderate": 0.15, "uniform": None}

DEFAULT_SPACING_NS = 100


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str
    n_keys: int
    n_events: int
    skew: str = "uniform"
    seed: int = 0
    spacing_ns: int = DEFAULT_SPACING_NS
    delay_mu: float = 10.0      # log of median delay in ns (request_response)
    delay_sigma: float = 1.5

    def __post_init__(self):
        if self.kind not in (ZIPF_REQUESTS, REQUEST_RESPONSE):
            raise ValueError(f"unknown workload kind {self.kind!r}")
        if self.n_keys < 1 or self.n_events < 1:
            raise ValueError("n_keys and n_events must be >= 1")
        if self.skew not in TOP10_TARGETS:
            raise ValueError(f"unknown skew preset {self.skew!r}")


def zipf_exponent(n_keys: int, top10_share: float | None) -> float:
    """Solve for s such that the expected share of the top 10 of n_keys
    zipf(s)-distributed keys equals top10_share. None means uniform (s=0)."""
    if top10_share is None:
        return 0.0
    if n_keys <= 10:
        raise ValueError("top-10 calibration needs more than 10 keys")
    ranks = np.arange(1, n_keys + 1, dtype=np.float64)

    def share(s: float) -> float:
        w = ranks ** -s
        return float(w[:10].sum() / w.sum())

    lo, hi = 0.0, 16.0
    if not share(lo) <= top10_share <= share(hi):
        raise ValueError(f"top-10 share {top10_share} unreachable with {n_keys} keys")
    for _ in range(80):
        mid = (lo + hi) / 2
        if share(mid) < top10_share:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def zipf_weights(n_keys: int, skew: str) -> np.ndarray:
    s = zipf_exponent(n_keys, TOP10_TARGETS[skew])
    w = np.arange(1, n_keys + 1, dtype=np.float64) ** -s
    return w / w.sum()


def gen_trace(spec: WorkloadSpec) -> Trace:
    """Deterministic synthetic trace for the given workload spec."""
    if spec.kind == ZIPF_REQUESTS:
        return _gen_zipf(spec)
    return _gen_request_response(spec)


def _gen_zipf(spec: WorkloadSpec) -> Trace:
    rng = np.random.default_rng(spec.seed)
    weights = zipf_weights(spec.n_keys, spec.skew)
    keys = rng.choice(spec.n_keys, size=spec.n_events, p=weights) + 1
    spacing = spec.spacing_ns
    events = [Event("request", (i + 1) * spacing, {"key": int(k)}) for i, k in enumerate(keys)]
    return Trace(events)


def _gen_request_response(spec: WorkloadSpec) -> Trace:
    """Paired request/response events; key identifies the pair. The merged
    stream is truncated to exactly n_events, so trailing requests may be
    left unmatched."""
    rng = np.random.default_rng(spec.seed)
    n_pairs = spec.n_events
    spacing = spec.spacing_ns
    req_times = (np.arange(n_pairs, dtype=np.int64) + 1) * spacing
    delays = np.maximum(1, rng.lognormal(spec.delay_mu, spec.delay_sigma, n_pairs).astype(np.int64))
    rsp_times = req_times + delays
    tagged = [(int(t), 0, i) for i, t in enumerate(req_times)]
    tagged += [(int(t), 1, i) for i, t in enumerate(rsp_times)]
    tagged.sort()
    events = []
    for t, is_rsp, i in tagged[: spec.n_events]:
        name = "response" if is_rsp else "request"
        events.append(Event(name, t, {"key": i + 1}))
    return Trace(events)


def split_trace(trace: Trace, fraction: float) -> tuple[Trace, Trace]:
    """Temporal prefix split: first floor(fraction*n) events train, rest test."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    cut = int(fraction * len(trace))
    return Trace(trace.events[:cut]), Trace(trace.events[cut:])


def write_trace_csv(trace: Trace, path) -> None:
    with open(path, "w") as fh:
        for ev in trace:
            fields = "".join(f",{k}={v}" for k, v in ev.payload.items())
            fh.write(f"{ev.time},{ev.name}{fields}\n")


def parse_trace_csv(path) -> Trace:
    events = []
    prev = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected time,event_name[,field=value...]")
            try:
                t = int(parts[0])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad timestamp {parts[0]!r}") from None
            if t < prev:
                raise ValueError(f"{path}:{lineno}: timestamp {t} goes backwards")
            payload = {}
            for field in parts[2:]:
                if "=" not in field:
                    raise ValueError(f"{path}:{lineno}: bad field {field!r}")
                k, _, v = field.partition("=")
                try:
                    payload[k] = int(v)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: non-integer field value {field!r}") from None
            events.append(Event(parts[1], t, payload))
            prev = t
    return Trace(events)
