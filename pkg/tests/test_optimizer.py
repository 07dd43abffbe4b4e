import pytest

from pipetune.apps import CacheProgram, MhtProgram, get_program
from pipetune.errors import DomainFailure, UnusableTrace
from pipetune.optimizer import (RestartDirective, build_report, default_verifier,
                                evaluate_config, optimize, report_json,
                                verify_and_rank)
from pipetune.params import Config
from pipetune.pipeline import PipelineModel
from pipetune.preprocess import brute_force_space
from pipetune.search import History, Lattice, SearchPoint
from pipetune.sim import Event, Trace
from pipetune.structures import derive_seed
from pipetune.traces import WorkloadSpec, gen_trace


def small_mht():
    # slots 4..64, ways 1..4: a space small enough to brute-force quickly.
    return MhtProgram(slots_exp=(2, 6), ways_max=4)


def mht_trace(n=4000, keys=600, seed=2):
    return gen_trace(WorkloadSpec("zipf_requests", n_keys=keys, n_events=n,
                                  skew="moderate", seed=seed))


class TestEvaluateConfig:
    def test_miss_rate_equals_first_touch_share(self):
        # Every key repeats within the timeout and the table holds them all:
        # misses = distinct keys.
        prog = get_program("cache")
        cfg = Config({"key_tracker": "plain", "tables": 4, "entries": 2048,
                      "cms_rows": 1, "cms_cols": 16,
                      "timeout_ns": 2**30, "promote_threshold": 0})
        keys = [1, 2, 3] * 8
        trace = Trace([Event("request", (i + 1) * 10, {"key": k})
                       for i, k in enumerate(keys)])
        score = evaluate_config(prog, cfg, trace, seed=1)
        assert score == pytest.approx(3 / len(keys))

    def test_empty_trace_is_unusable(self):
        prog = small_mht()
        with pytest.raises(UnusableTrace):
            evaluate_config(prog, Config({"slots": 16, "ways": 2}), Trace([]), seed=1)

    def test_repeatable(self):
        prog = small_mht()
        cfg = Config({"slots": 16, "ways": 2})
        trace = mht_trace()
        assert evaluate_config(prog, cfg, trace, 7) == evaluate_config(prog, cfg, trace, 7)


class TestOptimize:
    def test_exhaustive_matches_brute_force_oracle(self, small_pipe):
        prog = small_mht()
        trace = mht_trace()
        out = optimize(prog, trace, small_pipe, "exhaustive", budget_secs=120, seed=5)
        # Oracle: evaluate every compiling config directly.
        sim_seed = derive_seed(5, "sim")
        best = min(evaluate_config(prog, Config(e), trace, sim_seed)
                   for e in brute_force_space(prog, small_pipe))
        assert out.results.winner.score == best
        assert out.results.iterations == len(out.results.entries)

    def test_tiny_budget_runs_exactly_one_iteration(self, small_pipe):
        prog = small_mht()
        out = optimize(prog, mht_trace(800), small_pipe, "exhaustive",
                       budget_secs=1e-9, seed=5)
        assert out.results.iterations == 1
        assert len(out.results.entries) == 1

    def test_results_sorted_and_winner_verified(self, small_pipe):
        out = optimize(small_mht(), mht_trace(), small_pipe, "simanneal",
                       budget_secs=60, seed=9)
        scores = [e.score for e in out.results.entries]
        assert scores == sorted(scores)
        assert out.results.winner.verified

    def test_rejects_nonpositive_budget(self, small_pipe):
        with pytest.raises(ValueError):
            optimize(small_mht(), mht_trace(800), small_pipe, "exhaustive",
                     budget_secs=0, seed=1)

    def test_report_bytes_identical_across_runs(self, small_pipe):
        texts = []
        for _ in range(2):
            prog = small_mht()
            trace = mht_trace()
            out = optimize(prog, trace, small_pipe, "bayesian", budget_secs=60, seed=3)
            texts.append(report_json(build_report("mht", out, small_pipe)))
        assert texts[0] == texts[1]

    def test_workers_fanout_matches_serial(self, small_pipe):
        prog = small_mht()
        trace = mht_trace(1500)
        serial = optimize(prog, trace, small_pipe, "exhaustive", 120, 4)
        fanned = optimize(prog, trace, small_pipe, "exhaustive", 120, 4, workers=2)
        assert report_json(build_report("mht", serial, small_pipe)) == \
            report_json(build_report("mht", fanned, small_pipe))


class TestVerifyAndRank:
    def fake_history(self, prog, scored):
        history = History()
        for i, (cfg, score) in enumerate(scored):
            history.record(SearchPoint(i), score, cfg)
        return history

    def mht_cfg(self, slots, ways=1):
        return Config({"slots": slots, "ways": ways})

    def test_space_derived_entries_verify_immediately(self, small_pipe):
        prog = small_mht()
        history = self.fake_history(prog, [(self.mht_cfg(16), 0.3),
                                           (self.mht_cfg(32), 0.1)])
        out = verify_and_rank(history, prog, small_pipe)
        assert [e.score for e in out.entries] == [0.1, 0.3]
        assert out.entries[0].verified and not out.entries[1].verified

    def test_injected_rejector_falls_back_to_second(self, small_pipe):
        prog = small_mht()
        history = self.fake_history(prog, [(self.mht_cfg(16), 0.3),
                                           (self.mht_cfg(32), 0.1)])
        reject_32 = lambda p, cfg, pipe: cfg["slots"] != 32
        out = verify_and_rank(history, prog, small_pipe, verifier=reject_32)
        assert not out.entries[0].verified
        assert out.entries[1].verified
        assert out.winner.config["slots"] == 16

    def test_rejecting_everything_returns_restart(self, small_pipe):
        prog = small_mht()
        history = self.fake_history(prog, [(self.mht_cfg(16), 0.3),
                                           (self.mht_cfg(32), 0.1)])
        out = verify_and_rank(history, prog, small_pipe, verifier=lambda *a: False)
        assert isinstance(out, RestartDirective)
        assert len(out.excluded) == 2

    def test_default_verifier_is_greedy_layout(self, small_pipe):
        prog = MhtProgram()  # default domains reach past the small pipe's SRAM
        assert default_verifier(prog, self.mht_cfg(16), small_pipe)
        assert not default_verifier(prog, self.mht_cfg(4096), small_pipe)


class TestRestartLoop:
    def test_excluded_configs_never_reappear(self, small_pipe):
        prog = small_mht()
        trace = mht_trace(1500)
        # Reject the two best resource configs observed in a clean run, then
        # re-optimize: they must be excluded and something else must win.
        clean = optimize(prog, trace, small_pipe, "exhaustive", 120, 5)
        banned = {e.config.replace(): None for e in clean.results.entries[:2]}
        banned_slots = {(e.config["slots"], e.config["ways"])
                        for e in clean.results.entries[:2]}

        def verifier(p, cfg, pipe):
            return (cfg["slots"], cfg["ways"]) not in banned_slots

        out = optimize(prog, trace, small_pipe, "exhaustive", 120, 5, verifier=verifier)
        assert out.results.restarts >= 1
        assert (out.results.winner.config["slots"],
                out.results.winner.config["ways"]) not in banned_slots

    def test_everything_rejected_raises(self, small_pipe):
        with pytest.raises(DomainFailure):
            optimize(small_mht(), mht_trace(1000), small_pipe, "exhaustive",
                     120, 5, verifier=lambda *a: False)


class TestReport:
    def test_report_embeds_manifest(self, small_pipe):
        out = optimize(small_mht(), mht_trace(1000), small_pipe, "exhaustive", 120, 5)
        report = build_report("mht", out, small_pipe, extra={"train_trace": "t.csv"})
        assert report["app"] == "mht"
        assert report["seed"] == 5
        assert report["strategy"] == "exhaustive"
        assert report["pipeline"]["hash"] == small_pipe.digest()
        assert report["preprocess"]["space_size"] > 0
        assert report["entries"][0]["verified"]
        text = report_json(report)
        assert text.endswith("\n")
