"""Synthetic benchmark corpus shared by the acceptance tests.

Sources are id sequences drawn from a skewed token distribution shaped
like real SMILES corpora (a few very common tokens, a long light tail).
Targets are the sources with a fixed fraction of positions rewritten,
which is what makes source-substring drafting effective: long unedited
runs verify wholesale, edits force single-token steps.

The recipe is frozen; scripts/calibrate_corpus.py re-derives the expected
acceptance and pass-ratio margins for it with a standalone simulator.
"""

from __future__ import annotations

import numpy as np

from specdec.oracle import OracleSpec
from specdec.tokenizer import BOS_ID, EOS_ID

VOCAB_SIZE = 20
BODY_LEN = 50
CORPUS_SEED = 20260823
# low enough that a completed 51-token target outscores any early-EOS
# tie under raw log-prob sums
EPSILON = 0.05

# content ids 4..19 with SMILES-like frequencies (C, c, parens, O, =, ...)
TOKEN_IDS = np.arange(4, VOCAB_SIZE)
TOKEN_PROBS = np.array([
    0.35, 0.17, 0.09, 0.085, 0.07, 0.06, 0.05, 0.04,
    0.03, 0.02, 0.01, 0.01, 0.005, 0.005, 0.003, 0.002,
])


def make_query(rng: np.random.Generator, edit_rate: float
               ) -> tuple[list[int], OracleSpec]:
    """One (source, oracle spec) pair; floor(edit_rate * len) positions of
    the target are rewritten to a different token."""
    body = rng.choice(TOKEN_IDS, size=BODY_LEN, p=TOKEN_PROBS)
    n_edits = int(edit_rate * BODY_LEN)
    edits = []
    if n_edits:
        for pos in sorted(rng.choice(BODY_LEN, size=n_edits, replace=False)):
            new = int(rng.choice(TOKEN_IDS, p=TOKEN_PROBS))
            while new == body[pos]:
                new = int(rng.choice(TOKEN_IDS, p=TOKEN_PROBS))
            edits.append((int(pos), new))
    source = [BOS_ID] + [int(t) for t in body] + [EOS_ID]
    if edits:
        spec = OracleSpec(target_fn="edit", edits=tuple(edits),
                          epsilon=EPSILON)
    else:
        spec = OracleSpec(target_fn="identity", epsilon=EPSILON)
    return source, spec


def make_corpus(n_queries: int, edit_rate: float, seed: int = CORPUS_SEED
                ) -> list[tuple[list[int], OracleSpec]]:
    rng = np.random.default_rng(seed)
    return [make_query(rng, edit_rate) for _ in range(n_queries)]
