#!/usr/bin/env python3
"""Regenerate the committed tiny-model golden fixture.

Writes tests/data/golden_tiny.ckpt plus the expected encoder memory and
decoder logits computed by the scalar reference implementation in tests/.
Run from the repository root after any intentional change to the forward
pass or checkpoint format.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import reference_transformer as ref  # noqa: E402

from specdec.checkpoint import save_checkpoint  # noqa: E402
from specdec.model import ModelConfig, random_params  # noqa: E402
from specdec.tokenizer import SPECIAL_TOKENS, Vocabulary  # noqa: E402


def main():
    config = ModelConfig(vocab_size=9, num_layers=2, num_heads=2, d_model=8,
                         d_ff=16, max_len=24)
    params = random_params(config, seed=123)
    vocab = Vocabulary(list(SPECIAL_TOKENS) + ["C", "O", "N", "(", ")"])

    data_dir = ROOT / "tests" / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(params, config, vocab, data_dir / "golden_tiny.ckpt")

    ref_params = {k: v.tolist() for k, v in params.items()}
    ref_config = {"num_layers": config.num_layers, "num_heads": config.num_heads,
                  "d_model": config.d_model, "vocab_size": config.vocab_size}
    source = [1, 5, 2]
    prefix = [0, 0, 1, 4, 6]
    pad_count = 2
    memory = ref.encode(ref_params, ref_config, source)
    logits = ref.decode(ref_params, ref_config, prefix, pad_count, memory, source)

    expected = {"source": source, "memory": memory, "prefix": prefix,
                "padCount": pad_count, "logits": logits}
    (data_dir / "golden_tiny_expected.json").write_text(
        json.dumps(expected) + "\n")
    print("wrote", data_dir / "golden_tiny.ckpt")
    print("wrote", data_dir / "golden_tiny_expected.json")


if __name__ == "__main__":
    main()
