#!/usr/bin/env python3
"""Re-derive the benchmark-corpus margins with a standalone simulator.

The draft-and-verify process against the deterministic oracle is a pure
combinatorial computation: drafts are source windows, a window's accepted
count is the length of its exact match against the remaining target, and
each pass advances by the best accepted count plus one bonus token.  This
script recomputes acceptance rates and pass ratios for the frozen corpus
recipe without touching the decoding implementation, then cross-checks a
sample of queries against the real decoders.

Run from the repository root:  python3 scripts/calibrate_corpus.py
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from acceptance_corpus import make_corpus  # noqa: E402

DRAFT_LEN = 10
MAX_DRAFTS = 25


def windows(body: list[int]) -> list[tuple[int, ...]]:
    """First MAX_DRAFTS distinct sliding windows, as the engine builds them."""
    out: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for start in range(len(body) - DRAFT_LEN + 1):
        w = tuple(body[start : start + DRAFT_LEN])
        if w not in seen:
            seen.add(w)
            out.append(w)
        if len(out) == MAX_DRAFTS:
            break
    return out


def simulate_greedy_spec(source: list[int], target: list[int]
                         ) -> tuple[int, int, int]:
    """(passes, accepted, generated) for draft-and-verify greedy decoding.

    target includes the final end marker; the model's argmax is always the
    next target token, so each pass accepts the best window's matched run
    and the bonus token advances one more position.
    """
    body = source[1:-1]
    wins = windows(body)
    t, passes, accepted = 0, 0, 0
    while t < len(target):
        passes += 1
        best = 0
        for w in wins:
            k = 0
            for i, tok in enumerate(w):
                if t + i < len(target) and tok == target[t + i]:
                    k += 1
                else:
                    break
            if k > best:
                best = k
        accepted += best
        t += best + 1
    return passes, accepted, len(target)


def simulated_margins(corpus) -> dict[str, float]:
    from specdec.oracle import target_ids
    rates, ratios = [], []
    for source, spec in corpus:
        target = target_ids(spec, source)
        passes, accepted, generated = simulate_greedy_spec(source, target)
        rates.append(accepted / generated)
        ratios.append(passes / generated)  # greedy uses one pass per token
    n = len(rates)
    return {
        "meanAcceptance": sum(rates) / n,
        "minAcceptance": min(rates),
        "meanPassRatio": sum(ratios) / n,
        "maxPassRatio": max(ratios),
    }


def cross_check(corpus, sample: int) -> None:
    """The simulator must agree exactly with the real decoder."""
    from specdec.bench import run_strategy, StrategyConfig
    from specdec.oracle import OracleModel, target_ids

    from acceptance_corpus import VOCAB_SIZE

    for q, (source, spec) in enumerate(corpus[:sample]):
        model = OracleModel(spec, VOCAB_SIZE)
        result = run_strategy(
            model, source,
            StrategyConfig("greedy-spec", draft_length=DRAFT_LEN,
                           max_drafts=MAX_DRAFTS))
        sim = simulate_greedy_spec(source, target_ids(spec, source))
        got = (result.stats.forward_passes,
               result.stats.accepted_draft_tokens,
               result.stats.generated_tokens)
        assert got == sim, f"query {q}: decoder {got} != simulator {sim}"
    print(f"  cross-check: {sample} queries match the decoder exactly")


def sbs_sample(corpus, sample: int) -> None:
    from specdec.bench import run_strategy, StrategyConfig
    from specdec.oracle import OracleModel

    from acceptance_corpus import VOCAB_SIZE

    tot_beam = tot_sbs = 0
    overlap5 = top1 = 0
    for source, spec in corpus[:sample]:
        model = OracleModel(spec, VOCAB_SIZE)
        beam = run_strategy(model, source, StrategyConfig("beam", beam_size=5))
        sbs = run_strategy(model, source,
                           StrategyConfig("sbs", beam_size=5,
                                          draft_length=DRAFT_LEN,
                                          max_drafts=MAX_DRAFTS))
        tot_beam += beam.stats.forward_passes
        tot_sbs += sbs.stats.forward_passes
        beam_ids = [h.ids for h in beam.hypotheses]
        sbs_ids = [h.ids for h in sbs.hypotheses]
        overlap5 += len(set(beam_ids) & set(sbs_ids)) / 5
        top1 += beam_ids[0] == sbs_ids[0]
    print(f"  sbs/beam pass ratio: {tot_sbs / tot_beam:.3f}"
          f"  top5 overlap: {overlap5 / sample:.3f}"
          f"  top1 match: {top1 / sample:.3f}")


def main() -> None:
    for edit_rate in (0.0, 0.1):
        corpus = make_corpus(500, edit_rate)
        m = simulated_margins(corpus)
        print(f"edit rate {edit_rate}: "
              f"mean acceptance {m['meanAcceptance']:.4f} "
              f"(min {m['minAcceptance']:.4f}), "
              f"mean pass ratio {m['meanPassRatio']:.4f} "
              f"(max {m['maxPassRatio']:.4f})")
        cross_check(corpus, 25)
    print("sbs sample (edit rate 0.1, 50 queries):")
    sbs_sample(make_corpus(500, 0.1), 50)


if __name__ == "__main__":
    main()
