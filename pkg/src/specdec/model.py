"""Encoder-decoder transformer forward pass with left-padding support.

Post-layer-norm architecture: sublayer output is added to its input and the
sum is normalized.  Sinusoidal positional encodings are added to embeddings
scaled by sqrt(dModel).  Decoder rows may carry a left PAD prefix; each row's
positional encoding is shifted by its pad count so that logits at real
positions match the unpadded computation.

Numeric scheme, shared with the checkpoint-compatible trainer: tensors are
stored as 32-bit floats between operations, arithmetic inside an operation
accumulates in 64-bit, and each operation rounds its result back to 32-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IdOutOfRange, MalformedPadding, SequenceTooLong
from .tokenizer import PAD_ID

LN_EPS = 1e-5

_F32 = np.float32
_F64 = np.float64


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; encoder and decoder share numLayers."""

    vocab_size: int
    num_layers: int = 2
    num_heads: int = 4
    d_model: int = 64
    d_ff: int = 256
    max_len: int = 256

    def __post_init__(self):
        for name in ("vocab_size", "num_layers", "num_heads", "d_model",
                     "d_ff", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.num_heads != 0:
            raise ValueError("d_model must be divisible by num_heads")

    @property
    def d_head(self) -> int:
        return self.d_model // self.num_heads


# ModelParams is a plain name -> float32 ndarray map; the canonical name set
# and ordering below double as the checkpoint tensor order.
ModelParams = dict


def _affine_shapes(shapes: dict, prefix: str, d_in: int, d_out: int) -> None:
    shapes[prefix + "weight"] = (d_in, d_out)
    shapes[prefix + "bias"] = (d_out,)


def _attn_shapes(shapes: dict, prefix: str, d: int) -> None:
    for proj in ("q", "k", "v", "o"):
        _affine_shapes(shapes, f"{prefix}{proj}.", d, d)


def _ln_shapes(shapes: dict, prefix: str, d: int) -> None:
    shapes[prefix + "gamma"] = (d,)
    shapes[prefix + "beta"] = (d,)


def expected_param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical tensor names and shapes, in checkpoint order."""
    d, f, v = config.d_model, config.d_ff, config.vocab_size
    shapes: dict[str, tuple[int, ...]] = {"embedding": (v, d)}
    for i in range(config.num_layers):
        p = f"encoder.{i}."
        _attn_shapes(shapes, p + "attn.", d)
        _ln_shapes(shapes, p + "ln1.", d)
        _affine_shapes(shapes, p + "ff.w1.", d, f)
        _affine_shapes(shapes, p + "ff.w2.", f, d)
        _ln_shapes(shapes, p + "ln2.", d)
    for i in range(config.num_layers):
        p = f"decoder.{i}."
        _attn_shapes(shapes, p + "self_attn.", d)
        _ln_shapes(shapes, p + "ln1.", d)
        _attn_shapes(shapes, p + "cross_attn.", d)
        _ln_shapes(shapes, p + "ln2.", d)
        _affine_shapes(shapes, p + "ff.w1.", d, f)
        _affine_shapes(shapes, p + "ff.w2.", f, d)
        _ln_shapes(shapes, p + "ln3.", d)
    _affine_shapes(shapes, "output.", d, v)
    return shapes


def validate_params(params: ModelParams, config: ModelConfig) -> None:
    """Check the exact expected name set and shapes; no extras allowed."""
    expected = expected_param_shapes(config)
    for name, shape in expected.items():
        if name not in params:
            raise ValueError(f"missing tensor {name}")
        got = tuple(params[name].shape)
        if got != shape:
            raise ValueError(f"tensor {name} has shape {got}, expected {shape}")
        if params[name].dtype != _F32:
            raise ValueError(f"tensor {name} must be float32")
    extras = set(params) - set(expected)
    if extras:
        raise ValueError(f"unexpected tensors: {sorted(extras)}")


def random_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """Random initialization: scaled normal weights, unit/zero norms."""
    rng = np.random.default_rng(seed)
    params: ModelParams = {}
    for name, shape in expected_param_shapes(config).items():
        if name.endswith(".gamma"):
            params[name] = np.ones(shape, dtype=_F32)
        elif name.endswith((".beta", ".bias")):
            params[name] = np.zeros(shape, dtype=_F32)
        else:
            std = 1.0 / math.sqrt(shape[0] if len(shape) == 2 else shape[0])
            params[name] = rng.normal(0.0, std, size=shape).astype(_F32)
    return params


def positional_encoding(position: int, offset: int, d_model: int) -> np.ndarray:
    """Sinusoidal encoding evaluated at (position - offset), interleaved.

    PE(p, 2i) = sin(p / 10000^(2i/d)), PE(p, 2i+1) = cos(p / 10000^(2i/d)).
    """
    p = position - offset
    pe = np.empty(d_model, dtype=_F32)
    for i in range(0, d_model, 2):
        angle = p / (10000.0 ** (i / d_model))
        pe[i] = math.sin(angle)
        if i + 1 < d_model:
            pe[i + 1] = math.cos(angle)
    return pe


def _pe_table(max_len: int, d_model: int) -> np.ndarray:
    pos = np.arange(max_len, dtype=_F64)[:, None]
    i = np.arange(0, d_model, 2, dtype=_F64)[None, :]
    angle = pos / np.power(10000.0, i / d_model)
    table = np.empty((max_len, d_model), dtype=_F32)
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return table


@dataclass
class EncoderMemory:
    """Encoder output states plus the source PAD mask for cross-attention."""

    states: np.ndarray
    source_pad_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.source_pad_mask is None:
            self.source_pad_mask = np.zeros(len(self.states), dtype=bool)
        if len(self.states) != len(self.source_pad_mask):
            raise ValueError("states row count must equal mask length")


def _affine(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (x.astype(_F64) @ w.astype(_F64) + b.astype(_F64)).astype(_F32)


def _layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    x64 = x.astype(_F64)
    mu = x64.mean(axis=-1, keepdims=True)
    var = ((x64 - mu) ** 2).mean(axis=-1, keepdims=True)
    y = (x64 - mu) / np.sqrt(var + LN_EPS)
    return (y * gamma.astype(_F64) + beta.astype(_F64)).astype(_F32)


def _masked_softmax(scores: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    """Softmax over the last axis restricted to allowed positions.

    Rows with no allowed position (fully left-padded query rows) come out
    as all zeros rather than NaN; their outputs are never read.
    """
    neg = np.where(allowed, scores, -np.inf)
    rowmax = np.max(neg, axis=-1, keepdims=True)
    rowmax = np.where(np.isfinite(rowmax), rowmax, 0.0)
    with np.errstate(invalid="ignore"):
        e = np.where(allowed, np.exp(neg - rowmax), 0.0)
    denom = e.sum(axis=-1, keepdims=True)
    return np.where(denom > 0.0, e / np.where(denom > 0.0, denom, 1.0), 0.0)


class TransformerModel:
    """Pure-function forward passes over immutable parameters."""

    def __init__(self, params: ModelParams, config: ModelConfig):
        validate_params(params, config)
        self.params = params
        self.config = config
        self._pe = _pe_table(config.max_len, config.d_model)

    @property
    def max_len(self) -> int:
        return self.config.max_len

    @property
    def vocab_size(self) -> int:
        return self.config.vocab_size

    # --- shared pieces ---

    def _embed(self, ids: np.ndarray, positions: np.ndarray) -> np.ndarray:
        emb = self.params["embedding"].astype(_F64)[ids]
        scaled = (emb * math.sqrt(self.config.d_model)).astype(_F32)
        return (scaled.astype(_F64) + self._pe[positions].astype(_F64)).astype(_F32)

    def _attention(self, prefix: str, x_q: np.ndarray, x_kv: np.ndarray,
                   allowed: np.ndarray, attn_sink: list | None) -> np.ndarray:
        """Multi-head attention; heads are contiguous blocks of the
        projected vector.  allowed is [..., Tq, Tk] over query/key pairs."""
        p = self.params
        h, dh = self.config.num_heads, self.config.d_head
        q = _affine(x_q, p[prefix + "q.weight"], p[prefix + "q.bias"])
        k = _affine(x_kv, p[prefix + "k.weight"], p[prefix + "k.bias"])
        v = _affine(x_kv, p[prefix + "v.weight"], p[prefix + "v.bias"])

        def split(t):
            # [..., T, d] -> [..., h, T, dh]
            return np.moveaxis(
                t.reshape(t.shape[:-1] + (h, dh)), -2, -3)

        qh, kh, vh = split(q), split(k), split(v)
        scores = qh.astype(_F64) @ np.swapaxes(kh, -1, -2).astype(_F64)
        scores /= math.sqrt(dh)
        weights = _masked_softmax(scores, allowed[..., None, :, :]).astype(_F32)
        if attn_sink is not None:
            attn_sink.append(weights)
        ctx = (weights.astype(_F64) @ vh.astype(_F64)).astype(_F32)
        merged = np.moveaxis(ctx, -3, -2)
        merged = merged.reshape(merged.shape[:-2] + (h * dh,))
        return _affine(merged, p[prefix + "o.weight"], p[prefix + "o.bias"])

    def _ff(self, prefix: str, x: np.ndarray) -> np.ndarray:
        p = self.params
        hidden = np.maximum(
            _affine(x, p[prefix + "w1.weight"], p[prefix + "w1.bias"]), _F32(0.0))
        return _affine(hidden, p[prefix + "w2.weight"], p[prefix + "w2.bias"])

    def _ln(self, prefix: str, x: np.ndarray) -> np.ndarray:
        return _layer_norm(x, self.params[prefix + "gamma"],
                           self.params[prefix + "beta"])

    # --- public forward passes ---

    def encode_source(self, source) -> EncoderMemory:
        ids = np.asarray(source, dtype=np.int64)
        if ids.ndim != 1 or len(ids) == 0:
            raise ValueError("source must be a non-empty id sequence")
        if len(ids) > self.config.max_len:
            raise SequenceTooLong(
                f"source length {len(ids)} exceeds maxLen {self.config.max_len}")
        if ids.min() < 0 or ids.max() >= self.config.vocab_size:
            raise IdOutOfRange(
                f"source ids must lie in [0, {self.config.vocab_size})")
        pad_mask = ids == PAD_ID
        x = self._embed(ids, np.arange(len(ids)))
        allowed = np.broadcast_to(~pad_mask, (len(ids), len(ids)))
        for i in range(self.config.num_layers):
            p = f"encoder.{i}."
            x = self._ln(p + "ln1.", x + self._attention(p + "attn.", x, x,
                                                         allowed, None))
            x = self._ln(p + "ln2.", x + self._ff(p + "ff.", x))
        return EncoderMemory(states=x, source_pad_mask=pad_mask)

    def decode_step(self, prefixes, pad_counts, memory,
                    attn_sink: list | None = None) -> np.ndarray:
        """Full decoder forward over a batch of left-padded prefixes.

        Returns logits [B, T, vocabSize].  For row b with pad count c, the
        logits at positions j >= c match the unpadded row at j - c within
        1e-5: positions are offset by c, self-attention allows only non-PAD
        positions <= j, and cross-attention masks source PAD.  memory is one
        EncoderMemory shared by all rows or a list of B memories.
        """
        prefixes = np.asarray(prefixes, dtype=np.int64)
        if prefixes.ndim != 2 or prefixes.shape[1] == 0:
            raise ValueError("prefixes must be a non-empty [B, T] matrix")
        b_rows, t_len = prefixes.shape
        pads = np.asarray(pad_counts, dtype=np.int64)
        if pads.shape != (b_rows,):
            raise ValueError("pad_counts length must equal batch size")
        if t_len > self.config.max_len:
            raise SequenceTooLong(
                f"prefix length {t_len} exceeds maxLen {self.config.max_len}")
        if prefixes.min() < 0 or prefixes.max() >= self.config.vocab_size:
            raise IdOutOfRange(
                f"prefix ids must lie in [0, {self.config.vocab_size})")
        positions = np.arange(t_len)[None, :]
        is_pad = prefixes == PAD_ID
        if not np.array_equal(is_pad, positions < pads[:, None]):
            bad = int(np.argmax((is_pad != (positions < pads[:, None])).any(axis=1)))
            raise MalformedPadding(
                f"row {bad}: PAD ids must form exactly the declared left prefix")

        memories = memory if isinstance(memory, list) else [memory] * b_rows
        if len(memories) != b_rows:
            raise ValueError("need one memory per row (or a single shared one)")
        s_max = max(len(m.states) for m in memories)
        mem_states = np.zeros((b_rows, s_max, self.config.d_model), dtype=_F32)
        cross_allowed = np.zeros((b_rows, t_len, s_max), dtype=bool)
        for b, m in enumerate(memories):
            mem_states[b, : len(m.states)] = m.states
            cross_allowed[b, :, : len(m.states)] = ~m.source_pad_mask

        x = self._embed(prefixes, np.maximum(positions - pads[:, None], 0))
        causal = positions[0][None, :] <= positions[0][:, None]
        self_allowed = causal[None, :, :] & ~is_pad[:, None, :]
        for i in range(self.config.num_layers):
            p = f"decoder.{i}."
            x = self._ln(p + "ln1.", x + self._attention(
                p + "self_attn.", x, x, self_allowed, attn_sink))
            x = self._ln(p + "ln2.", x + self._attention(
                p + "cross_attn.", x, mem_states, cross_allowed, attn_sink))
            x = self._ln(p + "ln3.", x + self._ff(p + "ff.", x))
        return _affine(x, self.params["output.weight"], self.params["output.bias"])
