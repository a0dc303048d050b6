"""Checkpoint serialization tests."""

import json
import struct

import numpy as np
import pytest

from specdec.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from specdec.errors import BadMagic, CheckpointError, ShapeMismatch, TruncatedFile
from specdec.model import ModelConfig, expected_param_shapes, random_params
from specdec.tokenizer import SPECIAL_TOKENS, Vocabulary

TINY = ModelConfig(vocab_size=9, num_layers=1, num_heads=2, d_model=8,
                   d_ff=16, max_len=24)
VOCAB = Vocabulary(list(SPECIAL_TOKENS) + ["C", "O", "N", "(", ")"])


def write_tiny(path, seed=0):
    params = random_params(TINY, seed=seed)
    save_checkpoint(params, TINY, VOCAB, path)
    return params


class TestRoundTrip:
    def test_bitwise_params(self, tmp_path):
        path = tmp_path / "m.ckpt"
        params = write_tiny(path)
        loaded, config, vocab = load_checkpoint(path)
        assert config == TINY
        assert vocab.id_to_token == VOCAB.id_to_token
        assert set(loaded) == set(params)
        for name in params:
            assert loaded[name].dtype == np.float32
            assert np.array_equal(
                loaded[name].view(np.uint32), params[name].view(np.uint32)), name

    def test_save_load_save_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        write_tiny(a)
        params, config, vocab = load_checkpoint(a)
        save_checkpoint(params, config, vocab, b)
        assert a.read_bytes() == b.read_bytes()

    def test_header_is_inspectable_json(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_tiny(path)
        blob = path.read_bytes()
        (n,) = struct.unpack("<I", blob[len(MAGIC) : len(MAGIC) + 4])
        header = json.loads(blob[len(MAGIC) + 4 : len(MAGIC) + 4 + n])
        assert header["dModel"] == TINY.d_model
        assert header["vocabSize"] == TINY.vocab_size
        names = [t["name"] for t in header["tensors"]]
        assert names == list(expected_param_shapes(TINY))

    def test_fuzz_random_shapes(self, tmp_path):
        rng = np.random.default_rng(7)
        for trial in range(25):
            heads = int(rng.integers(1, 4))
            config = ModelConfig(
                vocab_size=int(rng.integers(5, 40)),
                num_layers=int(rng.integers(1, 4)),
                num_heads=heads,
                d_model=heads * int(rng.integers(2, 7)),
                d_ff=int(rng.integers(4, 33)),
                max_len=int(rng.integers(8, 65)))
            vocab = Vocabulary(list(SPECIAL_TOKENS) +
                               [f"t{i}" for i in range(config.vocab_size - 4)])
            params = random_params(config, seed=trial)
            path = tmp_path / f"f{trial}.ckpt"
            save_checkpoint(params, config, vocab, path)
            loaded, lconfig, lvocab = load_checkpoint(path)
            assert lconfig == config
            assert lvocab.id_to_token == vocab.id_to_token
            for name in params:
                assert np.array_equal(loaded[name].view(np.uint32),
                                      params[name].view(np.uint32))


class TestCorruption:
    def test_flipped_magic(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_tiny(path)
        blob = bytearray(path.read_bytes())
        blob[0] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(BadMagic):
            load_checkpoint(path)

    def test_truncated_floats_names_tensor(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_tiny(path)
        blob = path.read_bytes()
        (n,) = struct.unpack("<I", blob[len(MAGIC) : len(MAGIC) + 4])
        # keep the header and the first tensor's floats minus one value
        embed_bytes = 4 * TINY.vocab_size * TINY.d_model
        path.write_bytes(blob[: len(MAGIC) + 4 + n + embed_bytes - 4])
        with pytest.raises(TruncatedFile, match="embedding"):
            load_checkpoint(path)

    def test_header_shape_mismatch_names_tensor(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_tiny(path)
        blob = path.read_bytes()
        start = len(MAGIC) + 4
        (n,) = struct.unpack("<I", blob[len(MAGIC) : start])
        header = json.loads(blob[start : start + n])
        header["tensors"][0]["shape"] = [4, 4]
        raw = json.dumps(header, separators=(",", ":")).encode()
        path.write_bytes(MAGIC + struct.pack("<I", len(raw)) + raw +
                         blob[start + n :])
        with pytest.raises(ShapeMismatch, match="embedding"):
            load_checkpoint(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_tiny(path)
        path.write_bytes(path.read_bytes()[: len(MAGIC) + 2])
        with pytest.raises(TruncatedFile):
            load_checkpoint(path)

    def test_trailing_garbage(self, tmp_path):
        path = tmp_path / "m.ckpt"
        write_tiny(path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_vocab_size_mismatch(self, tmp_path):
        path = tmp_path / "m.ckpt"
        params = random_params(TINY)
        small_vocab = Vocabulary(list(SPECIAL_TOKENS) + ["C"])
        with pytest.raises(ShapeMismatch):
            save_checkpoint(params, TINY, small_vocab, path)
