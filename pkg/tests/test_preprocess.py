import pytest

from pipetune.apps import get_program
from pipetune.apps.base import SketchProgram
from pipetune.errors import EmptyCompilingSpace
from pipetune.params import (COUNT, MEMORY, Config, IntRange, ParamSpec,
                             Pow2Range)
from pipetune.pipeline import Action, DataflowGraph, PipelineModel
from pipetune.preprocess import (brute_force_space, enumerate_compiling,
                                 upper_bound_scan)


class RowsProgram(SketchProgram):
    """One count parameter: rows independent actions, one hash unit each."""

    name = "rows-toy"

    def __init__(self, rows_hi=8, width=4):
        self.width = width
        self._specs = [ParamSpec("rows", COUNT, IntRange(1, rows_hi))]

    def param_specs(self):
        return list(self._specs)

    def footprint(self, config):
        return DataflowGraph.of(
            Action(f"r{i}", frozenset(), (f"arr{i}", self.width), 1, 1)
            for i in range(config["rows"]))


class TwoIndependentProgram(SketchProgram):
    """rows actions on small arrays plus one independent array of `cols`
    words pinned first alphabetically, so the two parameters never compete."""

    name = "indep-toy"

    def __init__(self):
        self._specs = [
            ParamSpec("rows", COUNT, IntRange(1, 8)),
            ParamSpec("cols", MEMORY, IntRange(1, 64)),
        ]

    def param_specs(self):
        return list(self._specs)

    def footprint(self, config):
        actions = [Action("big", frozenset(), ("big_arr", config["cols"]), 1, 1)]
        actions += [Action(f"r{i}", frozenset(), (f"arr{i}", 1), 1, 1)
                    for i in range(config["rows"])]
        return DataflowGraph.of(actions)


class TestUpperBoundScan:
    def test_one_row_per_stage_bound(self):
        # One hash unit per stage forces one row per stage: bound = stages.
        pipe = PipelineModel(stages=4, sram_words_per_stage=64,
                             hash_units_per_stage=1, alu_slots_per_stage=8)
        prog = RowsProgram()
        bound = upper_bound_scan(prog, pipe, {}, prog.param_specs()[0])
        assert bound == 4

    def test_single_array_capped_by_stage_sram(self):
        prog = get_program("cms")
        pipe = PipelineModel(stages=4, sram_words_per_stage=64,
                             hash_units_per_stage=6, alu_slots_per_stage=8)
        cols = prog.param_specs()[0]
        bound = upper_bound_scan(prog, pipe, {"rows": 1}, cols)
        assert bound == 64

    def test_unfit_minimum_returns_none(self):
        prog = RowsProgram(width=128)
        pipe = PipelineModel(stages=2, sram_words_per_stage=64)
        assert upper_bound_scan(prog, pipe, {}, prog.param_specs()[0]) is None


class TestEnumerate:
    def test_single_count_param_space(self):
        pipe = PipelineModel(stages=4, sram_words_per_stage=64,
                             hash_units_per_stage=1, alu_slots_per_stage=8)
        space = enumerate_compiling(RowsProgram(), pipe)
        assert [e["rows"] for e in space.entries] == [1, 2, 3, 4]

    def test_independent_params_cartesian(self):
        # rows bound 4 (hash units: 1/stage... with the big array in stage 1),
        # cols bound 64: no coupling, so the space is the full product.
        pipe = PipelineModel(stages=8, sram_words_per_stage=128,
                             hash_units_per_stage=2, alu_slots_per_stage=8)
        space = enumerate_compiling(TwoIndependentProgram(), pipe)
        rows_seen = {e["rows"] for e in space.entries}
        cols_seen = {e["cols"] for e in space.entries}
        assert space.size == len(rows_seen) * len(cols_seen)
        assert space.size == space.grid_size  # everything compiles here

    @pytest.mark.parametrize("app", ["cms", "cache", "mht", "precision", "fridge"])
    def test_coupled_params_match_brute_force(self, app, small_pipe):
        prog = get_program(app)
        space = enumerate_compiling(prog, small_pipe)
        assert space.entries == brute_force_space(prog, small_pipe)

    def test_fewer_heuristic_calls_than_grid(self, small_pipe):
        prog = get_program("cache")
        space = enumerate_compiling(prog, small_pipe)
        assert space.heuristic_calls < space.grid_size

    def test_every_entry_fits(self, small_pipe):
        from pipetune.pipeline import layout

        prog = get_program("precision")
        space = enumerate_compiling(prog, small_pipe)
        nonresource = {s.name: s.domain.minimum for s in prog.search_specs()}
        for entry in space.entries:
            dfg = prog.footprint(Config({**entry, **nonresource}))
            assert layout(dfg, small_pipe, "greedy").fits

    def test_empty_space_raises(self):
        prog = RowsProgram(width=512)
        pipe = PipelineModel(stages=2, sram_words_per_stage=64)
        with pytest.raises(EmptyCompilingSpace):
            enumerate_compiling(prog, pipe)

    def test_selector_branches_concatenate(self, small_pipe):
        space = enumerate_compiling(get_program("cache"), small_pipe)
        trackers = [e["key_tracker"] for e in space.entries]
        # cms branch first (declaration order of the enum choices), then
        # precision, then plain; each contiguous.
        assert trackers == sorted(trackers, key=("cms", "precision", "plain").index)
        assert set(trackers) == {"cms", "precision", "plain"}

    def test_inactive_params_pinned_to_minimum(self, small_pipe):
        space = enumerate_compiling(get_program("cache"), small_pipe)
        for e in space.entries:
            if e["key_tracker"] != "cms":
                assert e["cms_rows"] == 1
                assert e["cms_cols"] == 16

    def test_deterministic(self, small_pipe):
        a = enumerate_compiling(get_program("mht"), small_pipe)
        b = enumerate_compiling(get_program("mht"), small_pipe)
        assert a.entries == b.entries and a.heuristic_calls == b.heuristic_calls


class TestSpaceCsv:
    def test_csv_shape(self, small_pipe):
        space = enumerate_compiling(get_program("mht"), small_pipe)
        lines = space.to_csv_text().splitlines()
        assert lines[0] == "index,slots,ways"
        assert lines[1].startswith("0,")
        assert len(lines) == space.size + 1

    def test_without_filters_entries(self, small_pipe):
        from pipetune.preprocess import entry_key

        space = enumerate_compiling(get_program("mht"), small_pipe)
        dropped = entry_key(space.entries[0])
        smaller = space.without({dropped})
        assert smaller.size == space.size - 1
        assert space.entries[0] not in smaller.entries
