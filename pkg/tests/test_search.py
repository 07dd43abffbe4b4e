import math

import pytest

from pipetune.params import NONRESOURCE, ParamSpec, Pow2Range
from pipetune.preprocess import CompilingSpace
from pipetune.search import (DegenerateSimplex, History, Lattice, SearchPoint,
                             ei_value, make_strategy, nm_step, sa_accept_prob)


def fake_space(n):
    return CompilingSpace(param_names=["x"], entries=[{"x": i} for i in range(n)])


def drive(strategy, lattice, score_fn, max_proposals=200):
    """Optimizer-style driving loop with a score cache for revisits."""
    history = History()
    cache = {}
    proposals = 0
    while proposals < max_proposals:
        point = strategy.next_point(history)
        if point is None:
            break
        proposals += 1
        if point.coords not in cache:
            cache[point.coords] = score_fn(point)
        history.record(point, cache[point.coords], lattice.decode(point))
        assert lattice.contains(point), point
    return history, cache, proposals


class TestSaAcceptProb:
    def test_improvement_always_accepted(self):
        assert sa_accept_prob(-0.1, 0.5) == 1.0

    def test_zero_delta_accepted(self):
        assert sa_accept_prob(0.0, 0.5) == 1.0

    def test_delta_equal_temp(self):
        assert sa_accept_prob(0.7, 0.7) == pytest.approx(math.exp(-1))

    def test_requires_positive_temp(self):
        with pytest.raises(ValueError):
            sa_accept_prob(0.1, 0.0)


class TestNmStep:
    def test_2d_reflection_clamped(self):
        simplex = [(0, 0), (1, 0), (0, 1)]
        scores = [0.0, 5.0, 1.0]  # worst is (1, 0)
        out = nm_step(simplex, scores, bounds=[(0, 10), (0, 10)])
        # centroid of (0,0),(0,1) is (0, 0.5); reflection (-1, 1) clamps to (0, 1)
        assert out == (0, 1)

    def test_1d_reflection(self):
        out = nm_step([(2,), (4,)], [1.0, 3.0], bounds=[(0, 15)])
        assert out == (0,)

    def test_degenerate_signals(self):
        with pytest.raises(DegenerateSimplex):
            nm_step([(3,), (3,)], [1.0, 1.0], bounds=[(0, 15)])


class TestEiValue:
    def test_no_uncertainty_no_improvement(self):
        assert ei_value(mean=2.0, sd=0.0, best=2.0) == 0.0

    def test_no_uncertainty_unit_improvement(self):
        assert ei_value(mean=1.0, sd=0.0, best=2.0) == 1.0

    def test_mean_at_best_unit_sd(self):
        assert ei_value(mean=2.0, sd=1.0, best=2.0) == pytest.approx(1 / math.sqrt(2 * math.pi))

    def test_negative_sd_rejected(self):
        with pytest.raises(ValueError):
            ei_value(0.0, -1.0, 0.0)


class TestLattice:
    def test_pow2_coordinates_are_exponents(self):
        lat = Lattice(fake_space(4),
                      [ParamSpec("p_denom", NONRESOURCE, Pow2Range(0, 5))])
        assert lat.bounds == [(0, 3), (0, 5)]
        cfg = lat.decode(SearchPoint(2, (3,)))
        assert cfg["x"] == 2 and cfg["p_denom"] == 8

    def test_round_clamp(self):
        lat = Lattice(fake_space(4), [])
        assert lat.round_clamp([7.9]).index == 3
        assert lat.round_clamp([-2.0]).index == 0


class TestExhaustive:
    def test_lexicographic_order_and_done(self):
        lat = Lattice(fake_space(3), [])
        strat = make_strategy("exhaustive", lat, seed=0)
        history, _, _ = drive(strat, lat, lambda p: float(p.index))
        assert [p.index for p in history.points] == [0, 1, 2]
        assert strat.next_point(history) is None

    def test_covers_nr_dims_lexicographically(self):
        lat = Lattice(fake_space(2), [ParamSpec("t", NONRESOURCE, Pow2Range(0, 1))])
        strat = make_strategy("exhaustive", lat, seed=0)
        history, _, _ = drive(strat, lat, lambda p: 0.0)
        assert [(p.index, p.nr) for p in history.points] == [
            (0, (0,)), (0, (1,)), (1, (0,)), (1, (1,))]

    def test_finds_true_minimum(self):
        lat = Lattice(fake_space(16), [])
        strat = make_strategy("exhaustive", lat, seed=0)
        history, _, _ = drive(strat, lat, lambda p: abs(p.index - 7))
        assert history.best == 0


class TestDeterminism:
    @pytest.mark.parametrize("name", ["exhaustive", "simanneal", "neldermead", "bayesian"])
    def test_same_seed_same_sequence(self, name):
        seqs = []
        for _ in range(2):
            lat = Lattice(fake_space(16), [])
            strat = make_strategy(name, lat, seed=123)
            history, _, _ = drive(strat, lat, lambda p: abs(p.index - 7), max_proposals=60)
            seqs.append([p.coords for p in history.points])
        assert seqs[0] == seqs[1]


class TestScalarConvergence:
    """Reference scalar case: minimize |index - 7| over indices 0..15."""

    def score(self, p):
        return float(abs(p.index - 7))

    def test_neldermead_converges_within_30_evaluations(self):
        lat = Lattice(fake_space(16), [])
        strat = make_strategy("neldermead", lat, seed=5)
        history, cache, _ = drive(strat, lat, self.score, max_proposals=60)
        assert history.best == 0.0
        assert len(cache) <= 30

    def test_simanneal_reaches_optimum_within_40(self):
        lat = Lattice(fake_space(16), [])
        strat = make_strategy("simanneal", lat, seed=3)
        history, _, proposals = drive(strat, lat, self.score, max_proposals=40)
        assert history.best == 0.0

    def test_bayesian_reaches_optimum_within_40(self):
        lat = Lattice(fake_space(16), [])
        strat = make_strategy("bayesian", lat, seed=3)
        history, _, proposals = drive(strat, lat, self.score, max_proposals=40)
        assert history.best == 0.0


class TestProposalDiscipline:
    def test_exhaustive_and_bayesian_never_repropose(self):
        for name in ("exhaustive", "bayesian"):
            lat = Lattice(fake_space(10), [])
            strat = make_strategy(name, lat, seed=9)
            history, _, _ = drive(strat, lat, lambda p: float(p.index % 3), max_proposals=50)
            coords = [p.coords for p in history.points]
            assert len(coords) == len(set(coords)), name

    def test_simanneal_freezes(self):
        # T0=1.0, alpha=0.95: temperature crosses 1e-3 after 135 proposals.
        lat = Lattice(fake_space(4), [])
        strat = make_strategy("simanneal", lat, seed=1)
        history, _, proposals = drive(strat, lat, lambda p: float(p.index), max_proposals=10_000)
        assert proposals == 135
        assert strat.next_point(history) is None

    def test_all_points_in_domain_with_nr_dims(self):
        nr = [ParamSpec("t", NONRESOURCE, Pow2Range(3, 8)),
              ParamSpec("k", NONRESOURCE, Pow2Range(0, 4))]
        for name in ("simanneal", "neldermead", "bayesian"):
            lat = Lattice(fake_space(6), nr)
            strat = make_strategy(name, lat, seed=11)
            drive(strat, lat, lambda p: float(sum(p.coords)), max_proposals=80)
