"""Corpus-level benchmarks comparing decoding strategies.

The primary speed metric is the forward-pass count, which is hardware
independent; wall time is measured and reported (mean over repeats with
sample standard deviation) but never gated on absolute value.  Whenever a
speculative greedy strategy runs, its output ids are checked against a
plain greedy reference on the same source; any mismatch is an
implementation bug and raises EquivalenceViolation.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import decoding
from .decoding import DecodeResult, DecodeStats
from .drafting import get_drafts
from .errors import EmptyGeneration, EquivalenceViolation

MODES = ("greedy", "greedy-spec", "beam", "sbs")


@dataclass(frozen=True)
class StrategyConfig:
    """One decoding strategy to benchmark.

    draft_length/max_drafts apply to the speculative modes, beam_size to
    beam and sbs; irrelevant fields are ignored by the other modes.
    """

    mode: str
    draft_length: int = 10
    max_drafts: int = 25
    beam_size: int = 5
    dilated_drafts: bool = False
    max_new_tokens: int | None = None
    max_iters: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @property
    def name(self) -> str:
        parts = []
        if self.mode in ("beam", "sbs"):
            parts.append(f"n={self.beam_size}")
        if self.mode in ("greedy-spec", "sbs"):
            parts.append(f"dl={self.draft_length}")
            if self.dilated_drafts:
                parts.append("dilated")
        return self.mode + (f"({','.join(parts)})" if parts else "")


class CountingModel:
    """Wraps a model to count decoder invocations and the largest batch.

    decode_step row counts are how the effective batch size is observed;
    the forward-pass counter cross-checks DecodeStats.
    """

    def __init__(self, model):
        self.inner = model
        self.forward_passes = 0
        self.max_rows = 0

    @property
    def max_len(self) -> int:
        return self.inner.max_len

    @property
    def vocab_size(self) -> int:
        return self.inner.vocab_size

    def encode_source(self, source):
        return self.inner.encode_source(source)

    def decode_step(self, prefixes, pad_counts, memory):
        self.forward_passes += 1
        self.max_rows = max(self.max_rows, len(prefixes))
        return self.inner.decode_step(prefixes, pad_counts, memory)


def run_strategy(model, source, strategy: StrategyConfig) -> DecodeResult:
    """Run one decode on one source according to the strategy config."""
    if strategy.mode == "greedy":
        return decoding.greedy(model, source, strategy.max_new_tokens)
    if strategy.mode == "beam":
        return decoding.beam_search(model, source, strategy.beam_size,
                                    strategy.max_new_tokens)
    drafts = get_drafts(source, strategy.draft_length, strategy.max_drafts,
                        strategy.dilated_drafts)
    if strategy.mode == "greedy-spec":
        return decoding.greedy_speculative(model, source, drafts,
                                           strategy.max_new_tokens)
    return decoding.speculative_beam_search(
        model, source, drafts, strategy.beam_size,
        strategy.max_new_tokens, strategy.max_iters)


def acceptance_rate(stats: DecodeStats) -> float:
    if stats.generated_tokens == 0:
        raise EmptyGeneration("acceptance rate undefined for zero tokens")
    return stats.accepted_draft_tokens / stats.generated_tokens


@dataclass
class QueryRecord:
    query: int
    strategy: str
    stats: DecodeStats
    acceptance: float

    def to_json_obj(self) -> dict:
        return {
            "query": self.query,
            "strategy": self.strategy,
            "forwardPasses": self.stats.forward_passes,
            "acceptedDraftTokens": self.stats.accepted_draft_tokens,
            "generatedTokens": self.stats.generated_tokens,
            "wallTimeMs": round(self.stats.wall_time_ms, 3),
            "acceptanceRate": round(self.acceptance, 6),
        }


@dataclass
class StrategySummary:
    strategy: str
    total_forward_passes: int
    mean_acceptance_rate: float
    wall_time_mean_ms: float
    wall_time_std_ms: float
    effective_batch_max: int
    speedup_forward_passes: float
    speedup_wall_time: float

    def to_json_obj(self) -> dict:
        return {
            "strategy": self.strategy,
            "totalForwardPasses": self.total_forward_passes,
            "meanAcceptanceRate": round(self.mean_acceptance_rate, 6),
            "wallTimeMeanMs": round(self.wall_time_mean_ms, 3),
            "wallTimeStdMs": round(self.wall_time_std_ms, 3),
            "effectiveBatchMax": self.effective_batch_max,
            "speedupForwardPasses": round(self.speedup_forward_passes, 4),
            "speedupWallTime": round(self.speedup_wall_time, 4),
        }


@dataclass
class BenchReport:
    baseline: str
    repeats: int
    records: list[QueryRecord]
    summaries: list[StrategySummary]

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_json_obj()) for r in self.records]
        lines.append(json.dumps({"summary": {
            "baseline": self.baseline,
            "repeats": self.repeats,
            "strategies": [s.to_json_obj() for s in self.summaries],
        }}))
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        header = (f"{'strategy':<24} {'passes':>7} {'accept':>7} "
                  f"{'batchMax':>8} {'wall ms':>16} {'fp x':>6} {'wall x':>7}")
        rows = [header, "-" * len(header)]
        for s in self.summaries:
            wall = f"{s.wall_time_mean_ms:.1f} ± {s.wall_time_std_ms:.1f}"
            rows.append(
                f"{s.strategy:<24} {s.total_forward_passes:>7} "
                f"{s.mean_acceptance_rate:>7.3f} {s.effective_batch_max:>8} "
                f"{wall:>16} {s.speedup_forward_passes:>6.2f} "
                f"{s.speedup_wall_time:>7.2f}")
        return "\n".join(rows)


def _decode_one(model, source, strategy: StrategyConfig
                ) -> tuple[DecodeResult, int]:
    counter = CountingModel(model)
    result = run_strategy(counter, source, strategy)
    if counter.forward_passes != result.stats.forward_passes:
        raise RuntimeError(
            f"forward-pass accounting drift: counted {counter.forward_passes}, "
            f"reported {result.stats.forward_passes}")
    return result, counter.max_rows


def run_bench(model, corpus, strategies, repeats: int = 1,
              baseline: str | None = None, jobs: int = 1) -> BenchReport:
    """Run every strategy over the corpus ``repeats`` times.

    corpus is a list of source id sequences.  Per-query stats come from the
    first repeat (decoding is deterministic, only wall time varies); wall
    times aggregate across repeats.  Speedups are ratios against the named
    baseline strategy (default: the first one).
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    names = [s.name for s in strategies]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate strategy names: {names}")
    baseline = baseline if baseline is not None else names[0]
    if baseline not in names:
        raise ValueError(f"baseline {baseline!r} not among strategies")

    greedy_ref: dict[int, tuple[int, ...]] = {}

    def reference_ids(q: int, cap: int | None) -> tuple[int, ...]:
        if q not in greedy_ref:
            greedy_ref[q] = decoding.greedy(model, corpus[q], cap).hypotheses[0].ids
        return greedy_ref[q]

    records: list[QueryRecord] = []
    summaries: list[StrategySummary] = []
    per_name: dict[str, StrategySummary] = {}
    for strategy in strategies:
        walls = []
        batch_max = 0
        first: list[tuple[DecodeResult, int]] = []
        for rep in range(repeats):
            t0 = time.perf_counter()
            if jobs > 1:
                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    outs = list(pool.map(
                        lambda src: _decode_one(model, src, strategy), corpus))
            else:
                outs = [_decode_one(model, src, strategy) for src in corpus]
            walls.append((time.perf_counter() - t0) * 1e3)
            batch_max = max(batch_max, max(m for _, m in outs))
            if rep == 0:
                first = outs
        rates = []
        for q, (result, _) in enumerate(first):
            if strategy.mode == "greedy-spec":
                ref = reference_ids(q, strategy.max_new_tokens)
                got = result.hypotheses[0].ids
                if got != ref:
                    raise EquivalenceViolation(
                        f"query {q}, strategy {strategy.name}: speculative ids "
                        f"{list(got)} != greedy ids {list(ref)}")
            rate = acceptance_rate(result.stats)
            rates.append(rate)
            records.append(QueryRecord(q, strategy.name, result.stats, rate))
        mean_wall = sum(walls) / len(walls)
        std_wall = (math.sqrt(sum((w - mean_wall) ** 2 for w in walls)
                              / (len(walls) - 1)) if len(walls) > 1 else 0.0)
        summary = StrategySummary(
            strategy=strategy.name,
            total_forward_passes=sum(r.stats.forward_passes for r, _ in first),
            mean_acceptance_rate=sum(rates) / len(rates),
            wall_time_mean_ms=mean_wall,
            wall_time_std_ms=std_wall,
            effective_batch_max=batch_max,
            speedup_forward_passes=0.0,
            speedup_wall_time=0.0)
        summaries.append(summary)
        per_name[strategy.name] = summary

    base = per_name[baseline]
    for s in summaries:
        s.speedup_forward_passes = (1.0 if s is base else
                                    base.total_forward_passes
                                    / s.total_forward_passes)
        s.speedup_wall_time = (1.0 if s is base else
                               base.wall_time_mean_ms / s.wall_time_mean_ms)
    return BenchReport(baseline, repeats, records, summaries)
