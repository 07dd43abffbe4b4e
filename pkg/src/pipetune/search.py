"""Black-box search over (compiling-space index x nonresource parameters).

Phase-1 preprocessing collapses all resource parameters into a single
enumeration index; the search lattice is that index plus one integer
coordinate per nonresource parameter (power-of-two domains step in exponent
space). Four strategies are built in: exhaustive, simulated annealing,
Nelder-Mead simplex, and Bayesian optimization with a Gaussian-process
surrogate. All are deterministic given their seed, propose only in-domain
points, and share one call protocol: ``next_point(history)`` returns the
next point to evaluate, or None once the strategy is finished (exhaustion,
frozen temperature, degenerate simplex, or vanishing expected improvement).

Strategy hyperparameters are fixed constants reused across all applications.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

import numpy as np

from .params import Config, EnumDomain, IntRange, ParamSpec, Pow2Range
from .preprocess import CompilingSpace

STRATEGIES = ("exhaustive", "simanneal", "neldermead", "bayesian")


@dataclass(frozen=True)
class SearchPoint:
    index: int                 # position in the compiling space
    nr: tuple[int, ...] = ()   # nonresource lattice coordinates

    @property
    def coords(self) -> tuple[int, ...]:
        return (self.index, *self.nr)


class History:
    """Ordered evaluation log; ``best`` is the running minimum score."""

    def __init__(self):
        self.points: list[SearchPoint] = []
        self.scores: list[float] = []
        self.configs: list[Config] = []

    def record(self, point: SearchPoint, score: float, config: Config | None = None):
        self.points.append(point)
        self.scores.append(score)
        self.configs.append(config)

    @property
    def evaluated(self):
        return list(zip(self.points, self.scores))

    @property
    def best(self) -> float | None:
        return min(self.scores) if self.scores else None

    def __len__(self):
        return len(self.points)


def _lattice_bounds(spec: ParamSpec) -> tuple[int, int]:
    d = spec.domain
    if isinstance(d, Pow2Range):
        return d.lo_exp, d.hi_exp
    if isinstance(d, IntRange):
        return d.lo, d.hi
    # bool -> {0,1}; enum -> choice index
    return 0, d.size - 1


def _lattice_value(spec: ParamSpec, coord: int):
    d = spec.domain
    if isinstance(d, Pow2Range):
        return 1 << coord
    if isinstance(d, IntRange):
        return coord
    if isinstance(d, EnumDomain):
        return d.choices[coord]
    return bool(coord)


class Lattice:
    """The discrete search domain: space index plus nonresource coordinates."""

    def __init__(self, space: CompilingSpace, nr_specs: list[ParamSpec]):
        if len(space) == 0:
            raise ValueError("empty compiling space")
        self.space = space
        self.nr_specs = list(nr_specs)
        self.bounds = [(0, len(space) - 1)] + [_lattice_bounds(s) for s in self.nr_specs]

    @property
    def ndims(self) -> int:
        return len(self.bounds)

    @property
    def size(self) -> int:
        n = 1
        for lo, hi in self.bounds:
            n *= hi - lo + 1
        return n

    def point(self, coords) -> SearchPoint:
        return SearchPoint(int(coords[0]), tuple(int(c) for c in coords[1:]))

    def contains(self, point: SearchPoint) -> bool:
        return all(lo <= c <= hi for c, (lo, hi) in zip(point.coords, self.bounds))

    def decode(self, point: SearchPoint) -> Config:
        assignments = dict(self.space[point.index])
        for spec, coord in zip(self.nr_specs, point.nr):
            assignments[spec.name] = _lattice_value(spec, coord)
        return Config(assignments)

    def iter_lex(self):
        ranges = [range(lo, hi + 1) for lo, hi in self.bounds]
        for coords in itertools.product(*ranges):
            yield self.point(coords)

    def random_point(self, rng: random.Random) -> SearchPoint:
        return self.point([rng.randint(lo, hi) for lo, hi in self.bounds])

    def round_clamp(self, float_coords) -> SearchPoint:
        coords = []
        for x, (lo, hi) in zip(float_coords, self.bounds):
            coords.append(max(lo, min(hi, round(x))))
        return self.point(coords)

    def normalized(self, point: SearchPoint) -> np.ndarray:
        out = np.empty(self.ndims)
        for i, (c, (lo, hi)) in enumerate(zip(point.coords, self.bounds)):
            out[i] = 0.0 if hi == lo else (c - lo) / (hi - lo)
        return out


def sa_accept_prob(delta: float, temp: float) -> float:
    """Metropolis acceptance: certain for improvements, exp(-delta/temp) otherwise."""
    if temp <= 0:
        raise ValueError("temperature must be positive")
    if delta <= 0:
        return 1.0
    return math.exp(-delta / temp)


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _norm_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def ei_value(mean: float, sd: float, best: float) -> float:
    """Expected improvement of a predicted score over the incumbent best."""
    if sd < 0:
        raise ValueError("standard deviation must be >= 0")
    if sd == 0:
        return max(0.0, best - mean)
    z = (best - mean) / sd
    return (best - mean) * _norm_cdf(z) + sd * _norm_pdf(z)


class DegenerateSimplex(Exception):
    """All simplex vertices rounded onto the same lattice point."""


def nm_step(simplex, scores, bounds) -> tuple[int, ...]:
    """One reflection of the worst vertex through the centroid of the rest
    (alpha=1), rounded to the nearest lattice point and clamped to bounds."""
    if len({tuple(v) for v in simplex}) == 1:
        raise DegenerateSimplex(str(simplex[0]))
    order = sorted(range(len(simplex)), key=lambda i: (scores[i], tuple(simplex[i])))
    worst = simplex[order[-1]]
    rest = [simplex[i] for i in order[:-1]]
    d = len(worst)
    centroid = [sum(v[j] for v in rest) / len(rest) for j in range(d)]
    reflected = [centroid[j] + (centroid[j] - worst[j]) for j in range(d)]
    return tuple(max(lo, min(hi, round(x))) for x, (lo, hi) in zip(reflected, bounds))


class ExhaustiveSearch:
    """Lexicographic sweep over (index, nr); the oracle for the others."""

    def __init__(self, lattice: Lattice, seed: int = 0):
        self._iter = lattice.iter_lex()

    def next_point(self, history: History) -> SearchPoint | None:
        return next(self._iter, None)


class SimulatedAnnealing:
    """+/-1 neighbor moves with geometric cooling T_k = T0 * alpha^k."""

    T0 = 1.0
    ALPHA = 0.95
    T_FROZEN = 1e-3

    def __init__(self, lattice: Lattice, seed: int):
        self.lattice = lattice
        self.rng = random.Random(seed)
        self.k = 0
        self.current: SearchPoint | None = None
        self.current_score: float | None = None
        self._awaiting: SearchPoint | None = None
        self._proposal_temp = self.T0

    def _neighbor(self, point: SearchPoint) -> SearchPoint:
        coords = list(point.coords)
        i = self.rng.randrange(len(coords))
        step = 1 if self.rng.random() < 0.5 else -1
        lo, hi = self.lattice.bounds[i]
        v = coords[i] + step
        if v > hi:
            v = hi - (v - hi)  # reflect at the upper bound
        if v < lo:
            v = lo + (lo - v)
        coords[i] = max(lo, min(hi, v))
        return self.lattice.point(coords)

    def next_point(self, history: History) -> SearchPoint | None:
        if self._awaiting is not None:
            score = history.scores[-1]
            if self.current is None:
                accept = True
            else:
                accept = self.rng.random() < sa_accept_prob(
                    score - self.current_score, self._proposal_temp)
            if accept:
                self.current, self.current_score = self._awaiting, score
            self._awaiting = None
        temp = self.T0 * self.ALPHA ** self.k
        if temp < self.T_FROZEN:
            return None
        self._proposal_temp = temp
        self.k += 1
        if self.current is None:
            p = self.lattice.random_point(self.rng)
        else:
            p = self._neighbor(self.current)
        self._awaiting = p
        return p


class NelderMeadSearch:
    """Nelder-Mead on the lattice: alpha=1 reflect, gamma=2 expand, rho=0.5
    contract, sigma=0.5 shrink; trial points round to the nearest lattice
    point, and the search ends when the simplex collapses to one point."""

    def __init__(self, lattice: Lattice, seed: int):
        self.lattice = lattice
        self.rng = random.Random(seed)
        self._gen = self._run()
        self._started = False

    def next_point(self, history: History) -> SearchPoint | None:
        try:
            if not self._started:
                self._started = True
                return next(self._gen)
            return self._gen.send(history.scores[-1])
        except StopIteration:
            return None

    def _initial_vertices(self, n: int) -> list[tuple[int, ...]]:
        verts: list[tuple[int, ...]] = []
        for _ in range(200):
            if len(verts) == n:
                break
            v = self.lattice.random_point(self.rng).coords
            if v not in verts:
                verts.append(v)
        while len(verts) < n:  # lattice smaller than the simplex
            verts.append(verts[-1] if verts else tuple(lo for lo, _ in self.lattice.bounds))
        return verts

    def _run(self):
        lat = self.lattice
        d = lat.ndims
        verts = self._initial_vertices(d + 1)
        scores = []
        for v in verts:
            scores.append((yield lat.point(v)))
        while True:
            order = sorted(range(d + 1), key=lambda i: (scores[i], verts[i]))
            verts = [verts[i] for i in order]
            scores = [scores[i] for i in order]
            if all(v == verts[0] for v in verts[1:]):
                return  # degenerate simplex
            best, worst = verts[0], verts[-1]
            centroid = [sum(v[j] for v in verts[:-1]) / d for j in range(d)]
            xr_cont = [centroid[j] + (centroid[j] - worst[j]) for j in range(d)]
            xr = lat.round_clamp(xr_cont).coords
            fr = yield lat.point(xr)
            if scores[0] <= fr < scores[-2]:
                verts[-1], scores[-1] = xr, fr
                continue
            if fr < scores[0]:
                xe = lat.round_clamp(
                    [centroid[j] + 2.0 * (xr_cont[j] - centroid[j]) for j in range(d)]).coords
                fe = yield lat.point(xe)
                if fe < fr:
                    verts[-1], scores[-1] = xe, fe
                else:
                    verts[-1], scores[-1] = xr, fr
                continue
            if fr < scores[-1]:
                xc = lat.round_clamp(
                    [centroid[j] + 0.5 * (xr_cont[j] - centroid[j]) for j in range(d)]).coords
                fc = yield lat.point(xc)
                if fc <= fr:
                    verts[-1], scores[-1] = xc, fc
                    continue
            else:
                xc = lat.round_clamp(
                    [centroid[j] + 0.5 * (worst[j] - centroid[j]) for j in range(d)]).coords
                fc = yield lat.point(xc)
                if fc < scores[-1]:
                    verts[-1], scores[-1] = xc, fc
                    continue
            # Shrink toward the best vertex; odd gaps halve toward it, so the
            # simplex always makes integer progress and must collapse.
            new_verts = [best]
            new_scores = [scores[0]]
            for v in verts[1:]:
                nv = tuple(b + int((x - b) / 2) for x, b in zip(v, best))
                fnv = yield lat.point(nv)
                new_verts.append(nv)
                new_scores.append(fnv)
            verts, scores = new_verts, new_scores


class BayesianSearch:
    """GP surrogate (squared-exponential kernel on min-max-normalized
    coordinates, length-scale 0.2, noise 1e-4) maximizing expected
    improvement; the first 5 points are seeded uniform draws."""

    N_INIT = 5
    LENGTH_SCALE = 0.2
    NOISE = 1e-4
    EI_FLOOR = 1e-9
    FULL_SCAN_LIMIT = 10_000
    SUBSET = 1024

    def __init__(self, lattice: Lattice, seed: int):
        self.lattice = lattice
        self.rng = random.Random(seed)
        self.proposed: set[tuple[int, ...]] = set()

    def _propose(self, point: SearchPoint) -> SearchPoint:
        self.proposed.add(point.coords)
        return point

    def _random_unevaluated(self) -> SearchPoint | None:
        for _ in range(1000):
            p = self.lattice.random_point(self.rng)
            if p.coords not in self.proposed:
                return p
        for p in self.lattice.iter_lex():
            if p.coords not in self.proposed:
                return p
        return None

    def _candidates(self) -> list[SearchPoint]:
        if self.lattice.size <= self.FULL_SCAN_LIMIT:
            return [p for p in self.lattice.iter_lex() if p.coords not in self.proposed]
        out = []
        seen = set()
        attempts = 0
        while len(out) < self.SUBSET and attempts < self.SUBSET * 20:
            attempts += 1
            p = self.lattice.random_point(self.rng)
            if p.coords in seen or p.coords in self.proposed:
                continue
            seen.add(p.coords)
            out.append(p)
        return out

    def next_point(self, history: History) -> SearchPoint | None:
        if len(self.proposed) >= self.lattice.size:
            return None
        if len(self.proposed) < self.N_INIT:
            p = self._random_unevaluated()
            return self._propose(p) if p else None
        cands = self._candidates()
        if not cands:
            return None
        X = np.array([self.lattice.normalized(p) for p in history.points])
        y = np.array(history.scores, dtype=np.float64)
        y_mean = float(y.mean())
        yc = y - y_mean
        sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        K = np.exp(-sq / (2.0 * self.LENGTH_SCALE ** 2))
        K[np.diag_indices_from(K)] += self.NOISE
        alpha = np.linalg.solve(K, yc)
        Xc = np.array([self.lattice.normalized(p) for p in cands])
        sq_star = ((Xc[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        K_star = np.exp(-sq_star / (2.0 * self.LENGTH_SCALE ** 2))
        mu = K_star @ alpha + y_mean
        v = np.linalg.solve(K, K_star.T)
        var = np.clip(1.0 + self.NOISE - np.einsum("ij,ji->i", K_star, v), 0.0, None)
        sd = np.sqrt(var)
        best = min(history.scores)
        best_ei, best_point = -1.0, None
        for p, m, s in zip(cands, mu, sd):
            e = ei_value(float(m), float(s), best)
            if e > best_ei:
                best_ei, best_point = e, p
        if best_ei < self.EI_FLOOR:
            return None
        return self._propose(best_point)


def make_strategy(name: str, lattice: Lattice, seed: int):
    if name == "exhaustive":
        return ExhaustiveSearch(lattice, seed)
    if name == "simanneal":
        return SimulatedAnnealing(lattice, seed)
    if name == "neldermead":
        return NelderMeadSearch(lattice, seed)
    if name == "bayesian":
        return BayesianSearch(lattice, seed)
    raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}")
