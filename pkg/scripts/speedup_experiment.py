#!/usr/bin/env python3
"""Measure forward-pass reductions on a synthetic copy-with-edits task.

Decodes a corpus of skewed-alphabet sources with the deterministic
oracle under four strategies (greedy, draft-and-verify greedy, beam
search, speculative beam search) and prints the benchmark table.
Speedups are forward-pass ratios, the hardware-independent currency;
wall times are reported for context only.

Run from the repository root:  python3 scripts/speedup_experiment.py
"""

import argparse
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from acceptance_corpus import (  # noqa: E402
    BODY_LEN,
    EPSILON,
    TOKEN_IDS,
    TOKEN_PROBS,
    VOCAB_SIZE,
)

from specdec.bench import StrategyConfig, run_bench  # noqa: E402
from specdec.decoding import BOS_ID, EOS_ID  # noqa: E402
from specdec.oracle import OracleModel, OracleSpec  # noqa: E402


def build_corpus(n_queries: int, rng) -> list[list[int]]:
    corpus = []
    for _ in range(n_queries):
        body = rng.choice(TOKEN_IDS, size=BODY_LEN, p=TOKEN_PROBS)
        corpus.append([BOS_ID] + [int(t) for t in body] + [EOS_ID])
    return corpus


def build_spec(edit_rate: float, rng) -> OracleSpec:
    """One edit pattern shared by the whole corpus, like the CLI's
    --oracle flag; a replacement can coincide with the original token,
    which just leaves that position unedited."""
    n_edits = int(edit_rate * BODY_LEN)
    if n_edits == 0:
        return OracleSpec(target_fn="identity", epsilon=EPSILON)
    positions = sorted(rng.choice(BODY_LEN, size=n_edits, replace=False))
    edits = tuple((int(p), int(rng.choice(TOKEN_IDS, p=TOKEN_PROBS)))
                  for p in positions)
    return OracleSpec(target_fn="edit", edits=edits, epsilon=EPSILON)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--queries", type=int, default=200)
    ap.add_argument("--edit-rate", type=float, default=0.1)
    ap.add_argument("--draft-length", type=int, default=10)
    ap.add_argument("--max-drafts", type=int, default=25)
    ap.add_argument("--beam-size", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", type=Path, default=None,
                    help="also write the per-query JSONL report here")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    spec = build_spec(args.edit_rate, rng)
    corpus = build_corpus(args.queries, rng)
    model = OracleModel(spec, VOCAB_SIZE, max_len=256)

    strategies = [
        StrategyConfig(mode="greedy"),
        StrategyConfig(mode="greedy-spec", draft_length=args.draft_length,
                       max_drafts=args.max_drafts),
        StrategyConfig(mode="beam", beam_size=args.beam_size),
        StrategyConfig(mode="sbs", beam_size=args.beam_size,
                       draft_length=args.draft_length,
                       max_drafts=args.max_drafts),
    ]
    report = run_bench(model, corpus, strategies, repeats=args.repeats,
                       baseline="greedy", jobs=args.jobs)
    print(report.table())
    if args.output is not None:
        args.output.write_text(report.to_jsonl())
        print("wrote", args.output)


if __name__ == "__main__":
    main()
