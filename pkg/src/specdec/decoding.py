"""Generation strategies: greedy, speculative greedy, beam search, and
speculative beam search.

Speculative greedy verifies source-substring drafts with exact-argmax
acceptance, so its output ids are identical to plain greedy's; it only
changes how many forward passes produce them.  Speculative beam search
extends the idea to n hypotheses: every draft is concatenated to every live
hypothesis, the best draft per hypothesis contributes candidates at every
cut of its accepted span, and the top n survive.  PAD and BOS are never
selectable as next tokens; stored scores are true model log-probabilities.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .drafting import DraftSet
from .errors import EmptyGeneration
from .tokenizer import BOS_ID, EOS_ID, PAD_ID


@dataclass(frozen=True)
class Hypothesis:
    """One decoded sequence: BOS-led ids, raw summed log-probability,
    finished flag, and how many of its tokens came from accepted drafts."""

    ids: tuple[int, ...]
    log_prob: float
    finished: bool
    accepted_tokens: int = 0

    @property
    def generated(self) -> int:
        return len(self.ids) - 1


@dataclass
class DecodeStats:
    forward_passes: int = 0
    accepted_draft_tokens: int = 0
    generated_tokens: int = 0
    wall_time_ms: float = 0.0


@dataclass
class DecodeResult:
    """Ranked hypotheses (best first) plus bookkeeping for one query."""

    hypotheses: list[Hypothesis]
    stats: DecodeStats


def log_softmax(row: np.ndarray) -> np.ndarray:
    x = row.astype(np.float64)
    m = np.max(x)
    if not np.isfinite(m):
        m = 0.0
    e = np.exp(x - m)
    return x - m - np.log(e.sum())


def masked_argmax(log_probs: np.ndarray) -> int:
    """Argmax over selectable tokens (PAD and BOS excluded), ties to the
    lowest token id."""
    masked = log_probs.copy()
    masked[[PAD_ID, BOS_ID]] = -np.inf
    return int(np.argmax(masked))


def top_n_tokens(log_probs: np.ndarray, n: int,
                 exclude: int | None = None) -> list[tuple[int, float]]:
    """Best n selectable tokens as (id, logProb), ties to the lowest id.

    PAD and BOS are never selectable; ``exclude`` drops one more token.
    """
    masked = log_probs.copy()
    masked[[PAD_ID, BOS_ID]] = -np.inf
    if exclude is not None:
        masked[exclude] = -np.inf
    order = np.lexsort((np.arange(len(masked)), -masked))
    picked = [(int(t), float(log_probs[t])) for t in order[:n]
              if np.isfinite(masked[t])]
    return picked


def pad_left(sequences) -> tuple[np.ndarray, list[int]]:
    """Left-pad id sequences to a common width; returns (matrix, padCounts)."""
    width = max(len(s) for s in sequences)
    matrix = np.full((len(sequences), width), PAD_ID, dtype=np.int64)
    pad_counts = []
    for b, s in enumerate(sequences):
        pad_counts.append(width - len(s))
        if len(s):
            matrix[b, width - len(s) :] = s
    return matrix, pad_counts


class ConcatResult(NamedTuple):
    matrix: np.ndarray
    pad_counts: list[int]
    row_origin: list[tuple[int, int]]
    drafts: tuple[tuple[int, ...], ...]


def concat_drafts_to_sequences(hypotheses, draft_set: DraftSet,
                               max_total: int | None = None) -> ConcatResult:
    """One row per (unfinished hypothesis, draft): leftPad(ids) ++ draft.

    Drafts are truncated so that width + draft + 1 stays within max_total
    (room for the bonus token); truncation collapses duplicates.  rowOrigin
    maps each row back to (hypothesis index, draft index in the returned
    drafts tuple).
    """
    live = [(i, h) for i, h in enumerate(hypotheses) if not h.finished]
    if not live:
        raise ValueError("no unfinished hypotheses to extend")
    width = max(len(h.ids) for _, h in live)
    drafts = draft_set.drafts
    if max_total is not None:
        keep = max(0, max_total - 1 - width)
        if keep < draft_set.draft_length:
            seen = {}
            for d in drafts:
                seen.setdefault(d[:keep], None)
            drafts = tuple(seen)
    n_rows = len(live) * len(drafts)
    d_len = len(drafts[0]) if drafts else 0
    matrix = np.full((n_rows, width + d_len), PAD_ID, dtype=np.int64)
    pad_counts, row_origin = [], []
    r = 0
    for h_idx, h in live:
        pad = width - len(h.ids)
        for d_idx, d in enumerate(drafts):
            matrix[r, pad : width] = h.ids
            if d:
                matrix[r, width :] = d
            pad_counts.append(pad)
            row_origin.append((h_idx, d_idx))
            r += 1
    return ConcatResult(matrix, pad_counts, row_origin, drafts)


def _accepted_count(logits_row: np.ndarray, start: int, draft) -> int:
    """Largest k such that each draft token is the argmax after the
    previous ones; logits_row is the [T, V] row and start indexes the last
    token of the undrafted prefix."""
    k = 0
    for i, tok in enumerate(draft):
        if masked_argmax(logits_row[start + i]) != tok:
            break
        k += 1
    return k


def select_best_draft(logit_batch, concat: ConcatResult,
                      hypotheses) -> dict[int, tuple[int, int]]:
    """Per hypothesis index: (winning draft index, accepted count).

    The draft with the most accepted tokens wins; ties go to the lowest
    draft index.
    """
    best: dict[int, tuple[int, int]] = {}
    for r, (h_idx, d_idx) in enumerate(concat.row_origin):
        pad = concat.pad_counts[r]
        start = pad + len(hypotheses[h_idx].ids) - 1
        k = _accepted_count(logit_batch[r], start, concat.drafts[d_idx])
        if h_idx not in best or k > best[h_idx][1]:
            best[h_idx] = (d_idx, k)
    return best


def sample_candidates(hyp: Hypothesis, draft, accepted: int,
                      logits_row: np.ndarray, pad_count: int, n: int,
                      max_ids_len: int) -> list[Hypothesis]:
    """Candidates from one hypothesis and its best draft: for every cut
    j in 0..accepted, the top-n next tokens after ids ++ draft[:j], scored
    by the model's own log-probabilities (accepted draft tokens included).

    At interior cuts the accepted continuation token itself is excluded
    from the top-n: its lineage is already represented by the deeper cuts,
    and emitting it as a short candidate would let the prefix outrank its
    own extensions under raw log-prob sums, stalling the search at one
    token per pass.  Only the final cut offers the unrestricted top-n.
    Produces (accepted+1)*n candidates, fewer only at the length cap.
    """
    out: list[Hypothesis] = []
    base_lp = hyp.log_prob
    start = pad_count + len(hyp.ids) - 1
    max_cut = min(accepted, max_ids_len - len(hyp.ids) - 1)
    for j in range(max_cut + 1):
        dist = log_softmax(logits_row[start + j])
        ids_j = hyp.ids + tuple(draft[:j])
        exclude = draft[j] if j < max_cut else None
        for tok, lp in top_n_tokens(dist, n, exclude=exclude):
            ids = ids_j + (tok,)
            from_draft = 1 if j < accepted and tok == draft[j] else 0
            out.append(Hypothesis(
                ids=ids,
                log_prob=base_lp + lp,
                finished=tok == EOS_ID or len(ids) >= max_ids_len,
                accepted_tokens=hyp.accepted_tokens + j + from_draft))
        if j < max_cut:
            base_lp += float(dist[draft[j]])
    return out


def sort_and_extract(candidates, n: int) -> list[Hypothesis]:
    """Top n by raw logProb, no length normalization; ties prefer shorter
    then lexicographically smaller ids; duplicates keep the best-ranked."""
    ranked = sorted(candidates, key=lambda h: (-h.log_prob, len(h.ids), h.ids))
    out, seen = [], set()
    for h in ranked:
        if h.ids in seen:
            continue
        seen.add(h.ids)
        out.append(h)
        if len(out) == n:
            break
    return out


def _resolve_cap(model, max_new_tokens: int | None) -> int:
    cap = model.max_len - 1
    if max_new_tokens is not None:
        cap = min(cap, max_new_tokens)
    if cap < 1:
        raise EmptyGeneration("no room to generate even one token")
    return cap


def greedy(model, source, max_new_tokens: int | None = None) -> DecodeResult:
    """Argmax decoding; one forward pass per generated token."""
    t0 = time.perf_counter()
    cap = _resolve_cap(model, max_new_tokens)
    memory = model.encode_source(source)
    ids = [BOS_ID]
    log_prob = 0.0
    passes = 0
    while len(ids) - 1 < cap:
        logits = model.decode_step([ids], [0], memory)
        passes += 1
        dist = log_softmax(logits[0, -1])
        tok = masked_argmax(dist)
        log_prob += float(dist[tok])
        ids.append(tok)
        if tok == EOS_ID:
            break
    hyp = Hypothesis(tuple(ids), log_prob, ids[-1] == EOS_ID, 0)
    stats = DecodeStats(
        forward_passes=passes,
        generated_tokens=hyp.generated,
        wall_time_ms=(time.perf_counter() - t0) * 1e3)
    return DecodeResult([hyp], stats)


def greedy_speculative(model, source, draft_set: DraftSet,
                       max_new_tokens: int | None = None) -> DecodeResult:
    """Draft-and-verify greedy decoding.

    Every step evaluates prefix ++ draft for all drafts in one batched
    forward pass; the draft with the longest exactly-verified prefix
    contributes its accepted tokens plus one bonus token.  Output ids are
    identical to greedy's.
    """
    t0 = time.perf_counter()
    cap = _resolve_cap(model, max_new_tokens)
    memory = model.encode_source(source)
    ids = [BOS_ID]
    log_prob = 0.0
    passes = 0
    accepted_total = 0
    while len(ids) - 1 < cap and ids[-1] != EOS_ID:
        # budget for draft tokens this pass: k accepted plus the bonus
        # token must fit in the remaining generation allowance
        room = cap - len(ids)
        drafts = draft_set.drafts
        if room < draft_set.draft_length:
            seen = {}
            for d in drafts:
                seen.setdefault(d[: max(room, 0)], None)
            drafts = tuple(seen)
        rows = [list(ids) + list(d) for d in drafts]
        logits = model.decode_step(rows, [0] * len(rows), memory)
        passes += 1
        start = len(ids) - 1
        best_d, best_k = 0, -1
        for d_idx, d in enumerate(drafts):
            k = _accepted_count(logits[d_idx], start, d)
            if k > best_k:
                best_d, best_k = d_idx, k
        row = logits[best_d]
        for i in range(best_k + 1):
            dist = log_softmax(row[start + i])
            tok = masked_argmax(dist)
            log_prob += float(dist[tok])
            ids.append(tok)
            if i < best_k:
                # verified: the argmax here is the draft token itself
                accepted_total += 1
            if tok == EOS_ID:
                break
    hyp = Hypothesis(tuple(ids), log_prob, ids[-1] == EOS_ID, accepted_total)
    stats = DecodeStats(
        forward_passes=passes,
        accepted_draft_tokens=accepted_total,
        generated_tokens=hyp.generated,
        wall_time_ms=(time.perf_counter() - t0) * 1e3)
    return DecodeResult([hyp], stats)


def beam_search(model, source, n: int, max_new_tokens: int | None = None
                ) -> DecodeResult:
    """Synchronized-length beam search of width n.

    The pool keeps the best n finished hypotheses seen anywhere in the
    search, not just round survivors, and competes in every extraction;
    the search stops when the overall top n are all finished or the
    length cap is reached.
    """
    t0 = time.perf_counter()
    if n < 1:
        raise ValueError("beam width must be >= 1")
    cap = _resolve_cap(model, max_new_tokens)
    memory = model.encode_source(source)
    live = [Hypothesis((BOS_ID,), 0.0, False)]
    pool: list[Hypothesis] = []
    passes = 0
    while live:
        rows = [list(h.ids) for h in live]
        logits = model.decode_step(rows, [0] * len(rows), memory)
        passes += 1
        candidates: list[Hypothesis] = []
        at_cap = len(live[0].ids) + 1 >= cap + 1
        for b, h in enumerate(live):
            dist = log_softmax(logits[b, -1])
            for tok, lp in top_n_tokens(dist, n):
                ids = h.ids + (tok,)
                candidates.append(Hypothesis(
                    ids, h.log_prob + lp, tok == EOS_ID or at_cap))
        pool = sort_and_extract(
            pool + [c for c in candidates if c.finished], n)
        top = sort_and_extract(candidates + pool, n)
        live = [h for h in top if not h.finished]
    best = sort_and_extract(pool, n)
    stats = DecodeStats(
        forward_passes=passes,
        generated_tokens=best[0].generated if best else 0,
        wall_time_ms=(time.perf_counter() - t0) * 1e3)
    return DecodeResult(best, stats)


def speculative_beam_search(model, source, draft_set: DraftSet, n: int,
                            max_new_tokens: int | None = None,
                            max_iters: int | None = None) -> DecodeResult:
    """Beam search over draft-verified extensions.

    Each round runs one forward pass over every (live hypothesis, draft)
    pair, keeps each hypothesis's best draft, expands candidates at every
    cut of the accepted span, and retains the global top n.  The finished
    pool works as in beam_search: best n finished seen anywhere, competing
    in every extraction.  With the singleton empty draft this reduces
    exactly to beam_search.
    """
    t0 = time.perf_counter()
    if n < 1:
        raise ValueError("beam width must be >= 1")
    cap = _resolve_cap(model, max_new_tokens)
    memory = model.encode_source(source)
    max_ids_len = cap + 1
    live = [Hypothesis((BOS_ID,), 0.0, False)]
    pool: list[Hypothesis] = []
    passes = 0
    while live and (max_iters is None or passes < max_iters):
        concat = concat_drafts_to_sequences(live, draft_set, model.max_len)
        logits = model.decode_step(concat.matrix, concat.pad_counts, memory)
        passes += 1
        best = select_best_draft(logits, concat, live)
        row_of = {origin: r for r, origin in enumerate(concat.row_origin)}
        candidates: list[Hypothesis] = []
        for h_idx, h in enumerate(live):
            d_idx, k = best[h_idx]
            r = row_of[(h_idx, d_idx)]
            candidates.extend(sample_candidates(
                h, concat.drafts[d_idx], k, logits[r], concat.pad_counts[r],
                n, max_ids_len))
        pool = sort_and_extract(
            pool + [c for c in candidates if c.finished], n)
        top = sort_and_extract(candidates + pool, n)
        live = [h for h in top if not h.finished]
    best_final = sort_and_extract(pool + live, n)
    top1 = best_final[0] if best_final else None
    stats = DecodeStats(
        forward_passes=passes,
        accepted_draft_tokens=top1.accepted_tokens if top1 else 0,
        generated_tokens=top1.generated if top1 else 0,
        wall_time_ms=(time.perf_counter() - t0) * 1e3)
    return DecodeResult(best_final, stats)


def score_sequence(model, source, ids) -> float:
    """Teacher-forced re-scoring: sum of next-token log-probabilities."""
    memory = model.encode_source(source)
    logits = model.decode_step([list(ids)], [0], memory)
    total = 0.0
    for pos in range(len(ids) - 1):
        total += float(log_softmax(logits[0, pos])[ids[pos + 1]])
    return total
