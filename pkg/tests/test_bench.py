"""Benchmark harness: strategy dispatch, counting, aggregation, and the
inline greedy-equivalence guard."""

import json

import numpy as np
import pytest

from specdec.bench import (
    CountingModel,
    StrategyConfig,
    acceptance_rate,
    run_bench,
    run_strategy,
)
from specdec.decoding import DecodeStats, greedy
from specdec.drafting import get_drafts
from specdec.errors import EmptyGeneration, EquivalenceViolation
from specdec.oracle import OracleModel, OracleSpec
from specdec.tokenizer import BOS_ID, EOS_ID

V = 12


def oracle(target_fn="identity", epsilon=0.1, **kw):
    return OracleModel(OracleSpec(target_fn=target_fn, epsilon=epsilon), V, **kw)


def src(body):
    return [BOS_ID] + list(body) + [EOS_ID]


CORPUS = [
    src([4, 5, 6, 7, 8, 9, 4, 5, 6, 7]),
    src([5, 5, 5, 5, 5, 5, 5, 5]),
    src([9, 8, 7, 6, 5, 4]),
]


class TestStrategyConfig:
    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            StrategyConfig(mode="nucleus")

    @pytest.mark.parametrize("cfg,name", [
        (StrategyConfig("greedy"), "greedy"),
        (StrategyConfig("greedy-spec", draft_length=4), "greedy-spec(dl=4)"),
        (StrategyConfig("beam", beam_size=3), "beam(n=3)"),
        (StrategyConfig("sbs", beam_size=5, draft_length=10), "sbs(n=5,dl=10)"),
        (StrategyConfig("sbs", beam_size=2, draft_length=6,
                        dilated_drafts=True), "sbs(n=2,dl=6,dilated)"),
    ])
    def test_names(self, cfg, name):
        assert cfg.name == name


class TestAcceptanceRate:
    def test_simple_fraction(self):
        assert acceptance_rate(DecodeStats(
            accepted_draft_tokens=78, generated_tokens=100)) == 0.78

    def test_zero_accepted(self):
        assert acceptance_rate(DecodeStats(
            accepted_draft_tokens=0, generated_tokens=7)) == 0.0

    def test_full_acceptance(self):
        assert acceptance_rate(DecodeStats(
            accepted_draft_tokens=7, generated_tokens=7)) == 1.0

    def test_zero_generated_raises(self):
        with pytest.raises(EmptyGeneration):
            acceptance_rate(DecodeStats(generated_tokens=0))


class TestCountingModel:
    def test_delegates_and_counts(self):
        model = CountingModel(oracle())
        assert model.vocab_size == V
        assert model.max_len == 256
        result = greedy(model, CORPUS[0])
        assert model.forward_passes == result.stats.forward_passes
        assert model.max_rows == 1

    def test_greedy_spec_batch_is_draft_count(self):
        model = CountingModel(oracle())
        drafts = get_drafts(CORPUS[0], 4)
        from specdec.decoding import greedy_speculative
        greedy_speculative(model, CORPUS[0], drafts)
        assert model.max_rows == len(drafts)

    def test_sbs_batch_inflates_to_live_times_drafts(self):
        # every step decodes live*|drafts| rows; the peak must show more
        # than one live hypothesis riding the same draft set
        model = CountingModel(oracle())
        drafts = get_drafts(CORPUS[0], 4)
        from specdec.decoding import speculative_beam_search
        speculative_beam_search(model, CORPUS[0], drafts, n=3)
        assert model.max_rows % len(drafts) == 0
        assert 2 <= model.max_rows // len(drafts) <= 3

    def test_sbs_batch_reaches_full_beam_times_drafts(self):
        from specdec.decoding import speculative_beam_search
        from specdec.model import ModelConfig, TransformerModel, random_params
        cfg = ModelConfig(vocab_size=V, num_layers=1, num_heads=2, d_model=16,
                          d_ff=32, max_len=64)
        model = CountingModel(TransformerModel(random_params(cfg, seed=0), cfg))
        drafts = get_drafts(CORPUS[0], 4)
        speculative_beam_search(model, CORPUS[0], drafts, n=3, max_iters=12)
        assert model.max_rows == 3 * len(drafts)


class TestRunStrategy:
    def test_dispatch_matches_direct_calls(self):
        model = oracle()
        for cfg, width in [(StrategyConfig("greedy"), 1),
                           (StrategyConfig("greedy-spec", draft_length=4), 1),
                           (StrategyConfig("beam", beam_size=3), 3),
                           (StrategyConfig("sbs", beam_size=3, draft_length=4), 3)]:
            result = run_strategy(model, CORPUS[0], cfg)
            assert len(result.hypotheses) == width
            assert result.hypotheses[0].ids[1:] == tuple(CORPUS[0][1:])


class _BatchSabotage:
    """Returns uniform logits whenever more than one row is decoded, so
    speculative runs diverge from the single-row greedy reference."""

    def __init__(self, inner):
        self.inner = inner

    @property
    def max_len(self):
        return self.inner.max_len

    @property
    def vocab_size(self):
        return self.inner.vocab_size

    def encode_source(self, source):
        return self.inner.encode_source(source)

    def decode_step(self, prefixes, pad_counts, memory):
        out = self.inner.decode_step(prefixes, pad_counts, memory)
        if len(np.asarray(prefixes)) > 1:
            return np.full_like(out, np.log(1.0 / self.vocab_size))
        return out


class TestRunBench:
    def test_speculative_uses_fewer_passes_and_identical_output(self):
        report = run_bench(oracle(), CORPUS, [
            StrategyConfig("greedy"),
            StrategyConfig("greedy-spec", draft_length=4)])
        by_name = {s.strategy: s for s in report.summaries}
        assert (by_name["greedy-spec(dl=4)"].total_forward_passes
                < by_name["greedy"].total_forward_passes)

    def test_baseline_speedup_is_exactly_one(self):
        report = run_bench(oracle(), CORPUS, [
            StrategyConfig("greedy"), StrategyConfig("beam", beam_size=2)])
        base = report.summaries[0]
        assert base.strategy == report.baseline == "greedy"
        assert base.speedup_forward_passes == 1.0
        assert base.speedup_wall_time == 1.0

    def test_aggregates_recomputable_from_records(self):
        report = run_bench(oracle(), CORPUS, [
            StrategyConfig("greedy-spec", draft_length=3)])
        rows = [r for r in report.records]
        s = report.summaries[0]
        assert s.total_forward_passes == sum(
            r.stats.forward_passes for r in rows)
        assert s.mean_acceptance_rate == pytest.approx(
            sum(r.acceptance for r in rows) / len(rows))

    def test_repeats_emit_single_record_set(self):
        report = run_bench(oracle(), CORPUS, [StrategyConfig("greedy")],
                           repeats=3)
        assert len(report.records) == len(CORPUS)
        assert report.summaries[0].wall_time_std_ms >= 0.0

    def test_jobs_do_not_change_results(self):
        strategies = [StrategyConfig("greedy"),
                      StrategyConfig("sbs", beam_size=3, draft_length=4)]
        serial = run_bench(oracle(), CORPUS, strategies, jobs=1)
        threaded = run_bench(oracle(), CORPUS, strategies, jobs=4)

        def key(report):
            return [(r.query, r.strategy, r.stats.forward_passes,
                     r.stats.accepted_draft_tokens, r.stats.generated_tokens)
                    for r in report.records]

        assert key(serial) == key(threaded)

    def test_equivalence_violation_is_hard_error(self):
        model = _BatchSabotage(oracle())
        with pytest.raises(EquivalenceViolation, match="query 0"):
            run_bench(model, CORPUS,
                      [StrategyConfig("greedy-spec", draft_length=4)])

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="corpus"):
            run_bench(oracle(), [], [StrategyConfig("greedy")])

    def test_duplicate_strategy_names_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            run_bench(oracle(), CORPUS,
                      [StrategyConfig("greedy"), StrategyConfig("greedy")])

    def test_unknown_baseline_rejected(self):
        with pytest.raises(ValueError, match="baseline"):
            run_bench(oracle(), CORPUS, [StrategyConfig("greedy")],
                      baseline="beam(n=5)")


class TestReportFormats:
    def test_jsonl_rows_then_summary(self):
        report = run_bench(oracle(), CORPUS, [
            StrategyConfig("greedy"),
            StrategyConfig("greedy-spec", draft_length=4)], repeats=2)
        lines = report.to_jsonl().strip().split("\n")
        assert len(lines) == 2 * len(CORPUS) + 1
        for line in lines[:-1]:
            row = json.loads(line)
            assert {"query", "strategy", "forwardPasses", "acceptedDraftTokens",
                    "generatedTokens", "wallTimeMs",
                    "acceptanceRate"} <= row.keys()
        summary = json.loads(lines[-1])["summary"]
        assert summary["baseline"] == "greedy"
        assert summary["repeats"] == 2
        assert [s["strategy"] for s in summary["strategies"]] == [
            "greedy", "greedy-spec(dl=4)"]

    def test_table_lists_every_strategy(self):
        report = run_bench(oracle(), CORPUS, [
            StrategyConfig("greedy"), StrategyConfig("beam", beam_size=2)])
        table = report.table()
        assert "greedy" in table and "beam(n=2)" in table
        assert "strategy" in table.splitlines()[0]
