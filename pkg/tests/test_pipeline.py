import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipetune.params import Config
from pipetune.pipeline import (Action, DataflowGraph, GraphError,
                               PipelineModel, layout)

from conftest import random_dfg


def chain(n, width=None):
    actions = []
    for i in range(n):
        deps = frozenset() if i == 0 else frozenset({f"a{i-1}"})
        arr = (f"arr{i}", width) if width else None
        actions.append(Action(f"a{i}", deps, arr, 1, 1))
    return DataflowGraph.of(actions)


class TestDataflowHeuristic:
    def test_chain_fits_with_levels(self):
        res = layout(chain(3), PipelineModel(stages=12), "dataflow")
        assert res.fits
        assert [res.assignment[f"a{i}"] for i in range(3)] == [1, 2, 3]

    def test_long_chain_rejected_by_both(self):
        dfg = chain(13)
        for heuristic in ("dataflow", "greedy"):
            assert not layout(dfg, PipelineModel(stages=12), heuristic).fits

    def test_ignores_all_other_resources(self):
        dfg = DataflowGraph.of([Action("a", frozenset(), ("arr", 10**9), 99, 99)])
        assert layout(dfg, PipelineModel(stages=1), "dataflow").fits


class TestGreedyHeuristic:
    def test_sram_pushes_second_array_to_next_stage(self):
        dfg = DataflowGraph.of([
            Action("a", frozenset(), ("arr_a", 32), 1, 1),
            Action("b", frozenset(), ("arr_b", 32), 1, 1),
        ])
        pipe = PipelineModel(stages=12, sram_words_per_stage=32)
        res = layout(dfg, pipe, "greedy")
        assert res.fits
        assert res.assignment == {"a": 1, "b": 2}

    def test_hash_units_cap_parallelism(self):
        dfg = DataflowGraph.of([Action(f"a{i}", frozenset(), None, 2, 0) for i in range(4)])
        res = layout(dfg, PipelineModel(stages=2, hash_units_per_stage=4), "greedy")
        assert res.fits
        assert sorted(res.assignment.values()) == [1, 1, 2, 2]

    def test_shared_array_must_land_in_one_stage(self):
        # c depends on b but touches a's array: the array is pinned to stage 1
        # while c cannot run before stage 3, so greedy must reject.
        dfg = DataflowGraph.of([
            Action("a", frozenset(), ("shared", 8), 1, 1),
            Action("b", frozenset({"a"}), None, 0, 1),
            Action("c", frozenset({"b"}), ("shared", 8), 0, 1),
        ])
        res = layout(dfg, PipelineModel(), "greedy")
        assert not res.fits
        assert "shared" in res.reason

    def test_same_stage_sharing_for_independent_array_actions(self):
        dfg = DataflowGraph.of([
            Action("a", frozenset(), ("shared", 8), 1, 1),
            Action("b", frozenset(), ("shared", 8), 1, 1),
        ])
        res = layout(dfg, PipelineModel(), "greedy")
        assert res.fits
        assert res.assignment["a"] == res.assignment["b"]

    def test_deterministic(self, small_pipe):
        for seed in range(20):
            dfg = random_dfg(seed)
            first = layout(dfg, small_pipe, "greedy")
            again = layout(dfg, small_pipe, "greedy")
            assert first == again


class TestGraphValidation:
    def test_cycle_rejected(self):
        dfg = DataflowGraph.of([
            Action("a", frozenset({"b"})),
            Action("b", frozenset({"a"})),
        ])
        for heuristic in ("dataflow", "greedy"):
            with pytest.raises(GraphError):
                layout(dfg, PipelineModel(), heuristic)

    def test_dangling_dep_rejected(self):
        dfg = DataflowGraph.of([Action("a", frozenset({"ghost"}))])
        with pytest.raises(GraphError):
            layout(dfg, PipelineModel(), "dataflow")


def replay_assignment(dfg, pipe, assignment):
    """Independent feasibility check of a greedy assignment."""
    sram = {}
    hashes = {}
    alus = {}
    array_home = {}
    by_id = {a.id: a for a in dfg.actions}
    for a in dfg.actions:
        s = assignment[a.id]
        assert 1 <= s <= pipe.stages
        for d in a.deps:
            assert assignment[d] < s, f"{a.id} shares a stage with its dependency"
        if a.array:
            aid, width = a.array
            if aid in array_home:
                assert array_home[aid] == s, "array split across stages"
            else:
                array_home[aid] = s
                sram[s] = sram.get(s, 0) + width
        hashes[s] = hashes.get(s, 0) + a.hash_units
        alus[s] = alus.get(s, 0) + a.alu_slots
    assert all(v <= pipe.sram_words_per_stage for v in sram.values())
    assert all(v <= pipe.hash_units_per_stage for v in hashes.values())
    assert all(v <= pipe.alu_slots_per_stage for v in alus.values())


class TestHeuristicProperties:
    def test_greedy_acceptance_implies_dataflow_acceptance(self, small_pipe):
        for seed in range(300):
            dfg = random_dfg(seed)
            if layout(dfg, small_pipe, "greedy").fits:
                assert layout(dfg, small_pipe, "dataflow").fits, f"seed {seed}"

    def test_greedy_assignments_are_feasible(self, small_pipe):
        checked = 0
        for seed in range(300):
            dfg = random_dfg(seed)
            res = layout(dfg, small_pipe, "greedy")
            if res.fits:
                replay_assignment(dfg, small_pipe, res.assignment)
                checked += 1
        assert checked > 50

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=60, deadline=None)
    def test_containment_property(self, seed):
        pipe = PipelineModel(stages=4, sram_words_per_stage=64,
                             hash_units_per_stage=6, alu_slots_per_stage=8)
        dfg = random_dfg(seed)
        if layout(dfg, pipe, "greedy").fits:
            assert layout(dfg, pipe, "dataflow").fits


class TestMonotoneDemand:
    """Bundled programs never shrink their demand when a resource grows."""

    def bump(self, config, name, bigger):
        return Config({**config.assignments, name: bigger})

    def test_all_apps_monotone(self):
        from pipetune.apps import get_program
        from pipetune.params import Pow2Range

        baselines = {
            "cms": Config({"cols": 64, "rows": 2}),
            "mht": Config({"slots": 64, "ways": 2}),
            "precision": Config({"slots": 64, "ways": 2}),
            "fridge": Config({"size": 256, "p_denom": 4}),
            "cache": Config({"key_tracker": "cms", "tables": 2, "entries": 128,
                             "cms_rows": 2, "cms_cols": 128,
                             "timeout_ns": 2**20, "promote_threshold": 2}),
        }
        for app, base in baselines.items():
            prog = get_program(app)
            g0 = prog.footprint(base)
            for spec in prog.resource_specs():
                cur = base[spec.name]
                bigger = cur * 2 if isinstance(spec.domain, Pow2Range) else cur + 1
                g1 = prog.footprint(self.bump(base, spec.name, bigger))
                assert g1.total_sram_words() >= g0.total_sram_words(), (app, spec.name)
                assert g1.total_hash_units() >= g0.total_hash_units(), (app, spec.name)
                assert g1.total_alu_slots() >= g0.total_alu_slots(), (app, spec.name)
                assert g1.longest_path() >= g0.longest_path(), (app, spec.name)


class TestSerialization:
    def test_dfg_text_round_trip(self):
        for seed in range(10):
            dfg = random_dfg(seed)
            assert DataflowGraph.from_text(dfg.to_text()) == dfg

    def test_pipeline_text_round_trip(self):
        pipe = PipelineModel(stages=7, sram_words_per_stage=128,
                             hash_units_per_stage=3, alu_slots_per_stage=5)
        assert PipelineModel.from_text(pipe.to_text()) == pipe

    def test_pipeline_rejects_zero_stage(self):
        with pytest.raises(ValueError):
            PipelineModel(stages=0)
