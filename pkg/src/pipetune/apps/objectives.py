"""Objective metrics computed from a finished measurement sink.

All scores are in [0, inf) and hit 0 on a perfect sink (all hits, exact
estimates, zero collisions). A zero denominator means the trace produced no
usable measurements and raises :class:`UnusableTrace`.
"""

from __future__ import annotations

from ..errors import UnusableTrace

MISS_RATE = "miss_rate"
NETWORK_COST = "network_cost"
MAX_PERCENTILE_ERROR = "max_percentile_error"
MEAN_ESTIMATE_ERROR = "mean_estimate_error"
COLLISION_RATIO = "collision_ratio"
TOPK_ERROR = "topk_error"

KINDS = (MISS_RATE, NETWORK_COST, MAX_PERCENTILE_ERROR,
         MEAN_ESTIMATE_ERROR, COLLISION_RATIO, TOPK_ERROR)

TOPK = 128


def objective_score(kind: str, sink, config=None) -> float:
    if kind == MISS_RATE:
        return miss_rate(sink)
    if kind == NETWORK_COST:
        return network_cost(sink)
    if kind == MAX_PERCENTILE_ERROR:
        return max_percentile_error(sink)
    if kind == MEAN_ESTIMATE_ERROR:
        return mean_estimate_error(sink)
    if kind == COLLISION_RATIO:
        return collision_ratio(sink)
    if kind == TOPK_ERROR:
        return topk_error(sink)
    raise ValueError(f"unknown objective kind {kind!r}")


def _hit_miss(sink) -> tuple[int, int]:
    hits = misses = 0
    for (found,) in sink.records.get("logHits", ()):
        if found:
            hits += 1
        else:
            misses += 1
    if hits + misses == 0:
        raise UnusableTrace("no cache accesses recorded")
    return hits, misses


def miss_rate(sink) -> float:
    hits, misses = _hit_miss(sink)
    return misses / (hits + misses)


def network_cost(sink) -> float:
    """Total network traffic relative to an uncached network: a miss costs
    2x a hit and a recirculated packet 0.5x, so cost = 2m + h + 0.5r over
    the per-request fractions m, h, r. Below 1.0 the cache pays off."""
    hits, misses = _hit_miss(sink)
    total = hits + misses
    recircs = len(sink.records.get("recirc", ()))
    return 2.0 * misses / total + hits / total + 0.5 * recircs / total


def _percentile(sorted_vals, q: int):
    """Nearest-rank percentile on a pre-sorted sequence."""
    n = len(sorted_vals)
    idx = max(0, -(-q * n // 100) - 1)  # ceil(q*n/100) - 1
    return sorted_vals[idx]


def true_rtts(sink) -> list[int]:
    """Ground-truth RTTs: replay recorded request/response hooks through an
    unbounded reference matcher."""
    open_requests: dict[int, int] = {}
    for key, t in sink.records.get("request", ()):
        open_requests[key] = t
    out = []
    for key, t in sink.records.get("response", ()):
        if key in open_requests:
            out.append(t - open_requests.pop(key))
    return out


def max_percentile_error(sink) -> float:
    """Worst relative error of the sampled delay distribution against ground
    truth over integer percentiles 5..95."""
    sampled = sorted(v for (v,) in sink.records.get("sample", ()))
    truth = sorted(true_rtts(sink))
    if not truth:
        raise UnusableTrace("no matched request/response pairs in trace")
    if not sampled:
        raise UnusableTrace("sampler produced no delay samples")
    worst = 0.0
    for q in range(5, 96):
        t = _percentile(truth, q)
        s = _percentile(sampled, q)
        worst = max(worst, abs(s - t) / t)
    return worst


def _exact_counts(sink) -> dict[int, int]:
    counts: dict[int, int] = {}
    for (key,) in sink.records.get("packets", ()):
        counts[key] = counts.get(key, 0) + 1
    if not counts:
        raise UnusableTrace("no packets recorded")
    return counts


def mean_estimate_error(sink) -> float:
    exact = _exact_counts(sink)
    estimates = {key: est for key, est in sink.records.get("est", ())}
    total = 0.0
    for key, true_count in exact.items():
        est = estimates.get(key, 0)
        total += abs(est - true_count) / max(1, true_count)
    return total / len(exact)


def collision_ratio(sink) -> float:
    counts = sink.counts("access")
    total = sum(counts.values())
    if total == 0:
        raise UnusableTrace("no table accesses recorded")
    return counts.get("collision", 0) / total


def topk_error(sink, k: int = TOPK) -> float:
    """Mean relative count error over the true top-k flows."""
    exact = _exact_counts(sink)
    cells = {key: count for key, count in sink.records.get("cells", ())}
    top = sorted(exact.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    total = 0.0
    for key, true_count in top:
        total += abs(cells.get(key, 0) - true_count) / true_count
    return total / len(top)
