"""Deterministic oracle model: a training-free stand-in for a trained model.

The oracle turns the source into a target sequence (identity, reversal, or an
edit script) and concentrates probability mass 1-epsilon on the next target
token while the prefix still matches; after any divergence the distribution
is uniform.  epsilon < 0.5 keeps the target token the argmax everywhere, so
greedy decoding reproduces the target exactly and acceptance behavior is
hand-traceable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IdOutOfRange, MalformedPadding, SequenceTooLong
from .tokenizer import BOS_ID, EOS_ID, PAD_ID, strip_specials

TARGET_FNS = ("identity", "reverse", "edit")


@dataclass(frozen=True)
class OracleSpec:
    target_fn: str = "identity"
    edits: tuple[tuple[int, int], ...] = ()
    epsilon: float = 0.1

    def __post_init__(self):
        if self.target_fn not in TARGET_FNS:
            raise ValueError(f"target_fn must be one of {TARGET_FNS}")
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 0.5)")
        if self.target_fn != "edit" and self.edits:
            raise ValueError("edits only apply to target_fn='edit'")


def target_ids(spec: OracleSpec, source) -> list[int]:
    """Target sequence for a source: transformed body plus trailing EOS.

    Edit-script positions beyond the body length are ignored so one spec can
    serve a whole corpus of varying lengths.
    """
    body = strip_specials(source)
    if spec.target_fn == "reverse":
        body = body[::-1]
    elif spec.target_fn == "edit":
        for pos, new_id in spec.edits:
            if 0 <= pos < len(body):
                body[pos] = new_id
    return body + [EOS_ID]


def oracle_next_distribution(spec: OracleSpec, source, prefix,
                             vocab_size: int) -> np.ndarray:
    """Next-token probability vector given a BOS-led prefix."""
    if not prefix or prefix[0] != BOS_ID:
        raise ValueError("prefix must start with BOS")
    target = target_ids(spec, source)
    generated = list(prefix[1:])
    t = len(generated)
    matched = t <= len(target) and generated == target[:t]
    v = vocab_size
    if not matched:
        return np.full(v, 1.0 / v)
    mode = target[t] if t < len(target) else EOS_ID
    dist = np.full(v, spec.epsilon / (v - 1))
    dist[mode] = 1.0 - spec.epsilon
    return dist


@dataclass(frozen=True)
class OracleMemory:
    """Stands in for EncoderMemory: the oracle only needs the source ids."""

    source_ids: tuple[int, ...]


class OracleModel:
    """Drop-in model exposing the encode_source/decode_step interface.

    decode_step returns log-probabilities, which are valid logits (softmax
    recovers the distribution exactly).  With epsilon=0 the off-target
    entries are -inf; argmax and the log-probability of any chosen on-target
    token remain well defined.
    """

    def __init__(self, spec: OracleSpec, vocab_size: int, max_len: int = 256):
        if vocab_size < 5:
            raise ValueError("vocab_size too small for an oracle alphabet")
        self.spec = spec
        self.vocab_size = vocab_size
        self.max_len = max_len

    def encode_source(self, source) -> OracleMemory:
        ids = list(source)
        if len(ids) > self.max_len:
            raise SequenceTooLong(
                f"source length {len(ids)} exceeds maxLen {self.max_len}")
        if any(not 0 <= i < self.vocab_size for i in ids):
            raise IdOutOfRange(f"source ids must lie in [0, {self.vocab_size})")
        return OracleMemory(source_ids=tuple(ids))

    def decode_step(self, prefixes, pad_counts, memory) -> np.ndarray:
        """Log-probability batch [B, T, vocabSize], one row per prefix."""
        prefixes = np.asarray(prefixes, dtype=np.int64)
        b_rows, t_len = prefixes.shape
        if t_len > self.max_len:
            raise SequenceTooLong(
                f"prefix length {t_len} exceeds maxLen {self.max_len}")
        if prefixes.min() < 0 or prefixes.max() >= self.vocab_size:
            raise IdOutOfRange(f"prefix ids must lie in [0, {self.vocab_size})")
        pads = np.asarray(pad_counts, dtype=np.int64)
        positions = np.arange(t_len)[None, :]
        if not np.array_equal(prefixes == PAD_ID, positions < pads[:, None]):
            raise MalformedPadding("PAD ids must form exactly the declared prefix")
        memories = memory if isinstance(memory, list) else [memory] * b_rows
        v = self.vocab_size
        out = np.full((b_rows, t_len, v), 1.0 / v)
        for b in range(b_rows):
            target = np.asarray(target_ids(self.spec, memories[b].source_ids))
            pad = int(pads[b])
            gen = prefixes[b, pad + 1 :]
            m = min(len(gen), len(target))
            # matched[j]: the j generated tokens so far all follow the target
            matched = np.empty(len(gen) + 1, dtype=bool)
            matched[0] = True
            matched[1 : m + 1] = np.cumprod(gen[:m] == target[:m]).astype(bool)
            matched[m + 1 :] = False
            modes = np.append(target, EOS_ID)
            for j in np.nonzero(matched)[0]:
                row = out[b, pad + j]
                row[:] = self.spec.epsilon / (v - 1)
                row[modes[min(j, len(target))]] = 1.0 - self.spec.epsilon
        with np.errstate(divide="ignore"):
            return np.log(out)


def load_oracle_spec(path: str | Path) -> OracleSpec:
    """Read an OracleSpec from a small JSON config.

    Accepted forms: {"targetFn": "identity"}, {"targetFn": "reverse"}, or
    {"targetFn": {"editScript": [[pos, newTokenId], ...]}}; optional
    "epsilon" (default 0.1).
    """
    data = json.loads(Path(path).read_text())
    fn = data.get("targetFn", "identity")
    edits: tuple[tuple[int, int], ...] = ()
    if isinstance(fn, dict):
        script = fn.get("editScript")
        if script is None:
            raise ValueError("targetFn object must carry 'editScript'")
        edits = tuple((int(p), int(t)) for p, t in script)
        fn = "edit"
    return OracleSpec(target_fn=fn, edits=edits,
                      epsilon=float(data.get("epsilon", 0.1)))
