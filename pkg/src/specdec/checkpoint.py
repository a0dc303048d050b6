"""Binary checkpoint serialization.

Layout: magic ``SPDK1\\n``; u32-LE length-prefixed UTF-8 JSON header carrying
the config fields and the ordered tensor list [{name, shape}]; the raw
little-endian float32 tensor data concatenated in header order; a u32-LE
length-prefixed vocabulary block holding the same bytes as the vocabulary
file.  Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, CheckpointError, ShapeMismatch, TruncatedFile
from .model import ModelConfig, ModelParams, expected_param_shapes, validate_params
from .tokenizer import Vocabulary

MAGIC = b"SPDK1\n"

# JSON header keys <-> ModelConfig fields, in serialized order.
_CONFIG_KEYS = (
    ("numLayers", "num_layers"),
    ("numHeads", "num_heads"),
    ("dModel", "d_model"),
    ("dFF", "d_ff"),
    ("vocabSize", "vocab_size"),
    ("maxLen", "max_len"),
)


def _header_bytes(config: ModelConfig) -> bytes:
    header = {key: getattr(config, attr) for key, attr in _CONFIG_KEYS}
    header["tensors"] = [
        {"name": name, "shape": list(shape)}
        for name, shape in expected_param_shapes(config).items()
    ]
    return json.dumps(header, separators=(",", ":")).encode("utf-8")


def save_checkpoint(params: ModelParams, config: ModelConfig,
                    vocab: Vocabulary, path: str | Path) -> None:
    validate_params(params, config)
    if len(vocab) != config.vocab_size:
        raise ShapeMismatch(
            f"vocabulary has {len(vocab)} entries, config says {config.vocab_size}")
    vocab_bytes = vocab.to_bytes()
    header = _header_bytes(config)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for name in expected_param_shapes(config):
            f.write(np.ascontiguousarray(params[name], dtype="<f4").tobytes())
        f.write(struct.pack("<I", len(vocab_bytes)))
        f.write(vocab_bytes)


def _take(blob: bytes, offset: int, n: int, what: str) -> tuple[bytes, int]:
    if offset + n > len(blob):
        raise TruncatedFile(f"file ends inside {what}")
    return blob[offset : offset + n], offset + n


def read_header_json(path: str | Path) -> str:
    """Return the raw header JSON text without loading tensor data."""
    blob = Path(path).read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"not a checkpoint file: expected magic {MAGIC!r}")
    offset = len(MAGIC)
    raw, offset = _take(blob, offset, 4, "header length")
    (header_len,) = struct.unpack("<I", raw)
    raw, _ = _take(blob, offset, header_len, "header")
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise CheckpointError(f"unreadable header: {e}") from e


def load_checkpoint(path: str | Path):
    """Read a checkpoint back as (params, config, vocab)."""
    blob = Path(path).read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"not a checkpoint file: expected magic {MAGIC!r}")
    offset = len(MAGIC)
    raw, offset = _take(blob, offset, 4, "header length")
    (header_len,) = struct.unpack("<I", raw)
    raw, offset = _take(blob, offset, header_len, "header")
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"unreadable header: {e}") from e

    try:
        config = ModelConfig(
            **{attr: int(header[key]) for key, attr in _CONFIG_KEYS})
        declared = [(t["name"], tuple(t["shape"])) for t in header["tensors"]]
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"malformed header: {e}") from e

    expected = expected_param_shapes(config)
    if len(declared) != len(expected):
        raise ShapeMismatch(
            f"header declares {len(declared)} tensors, config needs {len(expected)}")
    for (name, shape), (want_name, want_shape) in zip(declared, expected.items()):
        if name != want_name:
            raise ShapeMismatch(f"tensor {name}: expected {want_name} here")
        if shape != want_shape:
            raise ShapeMismatch(
                f"tensor {name} declared {list(shape)}, expected {list(want_shape)}")

    params: ModelParams = {}
    for name, shape in declared:
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        raw, offset = _take(blob, offset, 4 * count, f"tensor {name}")
        params[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()

    raw, offset = _take(blob, offset, 4, "vocabulary length")
    (vocab_len,) = struct.unpack("<I", raw)
    raw, offset = _take(blob, offset, vocab_len, "vocabulary")
    try:
        vocab = Vocabulary.from_bytes(raw)
    except ValueError as e:
        raise CheckpointError(f"bad vocabulary block: {e}") from e
    if len(vocab) != config.vocab_size:
        raise ShapeMismatch(
            f"vocabulary has {len(vocab)} entries, config says {config.vocab_size}")
    if offset != len(blob):
        raise CheckpointError(f"{len(blob) - offset} trailing bytes after vocabulary")
    return params, config, vocab
