#!/usr/bin/env python3
"""Write a random-weight checkpoint for smoke tests and CLI demos.

The vocabulary is the four special tokens plus single-character SMILES
atoms and bonds, truncated or extended with placeholder tokens to match
--vocab-size.  Optionally writes the vocabulary as a text file next to
the checkpoint so the same tokens can be fed to `specdec build-vocab`
consumers or the trainer.
"""

import argparse
from pathlib import Path

from specdec.checkpoint import save_checkpoint
from specdec.model import ModelConfig, random_params
from specdec.tokenizer import SPECIAL_TOKENS, Vocabulary

BASE_TOKENS = ["C", "c", "O", "o", "N", "n", "(", ")", "=", "#",
               "1", "2", "3", "F", "S", "s", "Cl", "Br", "[nH]", "/"]


def build_vocab(vocab_size: int) -> Vocabulary:
    content = vocab_size - len(SPECIAL_TOKENS)
    if content < 1:
        raise SystemExit("--vocab-size must exceed the 4 special tokens")
    tokens = list(BASE_TOKENS[:content])
    while len(tokens) < content:
        tokens.append(f"t{len(tokens)}")
    return Vocabulary(list(SPECIAL_TOKENS) + tokens)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("output", type=Path, help="checkpoint path to write")
    ap.add_argument("--vocab-size", type=int, default=24)
    ap.add_argument("--layers", type=int, default=2)
    ap.add_argument("--heads", type=int, default=4)
    ap.add_argument("--d-model", type=int, default=64)
    ap.add_argument("--d-ff", type=int, default=256)
    ap.add_argument("--max-len", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--write-vocab", action="store_true",
                    help="also write <output>.vocab.txt, one token per line")
    args = ap.parse_args()

    config = ModelConfig(vocab_size=args.vocab_size, num_layers=args.layers,
                         num_heads=args.heads, d_model=args.d_model,
                         d_ff=args.d_ff, max_len=args.max_len)
    vocab = build_vocab(args.vocab_size)
    params = random_params(config, seed=args.seed)
    save_checkpoint(params, config, vocab, args.output)
    print("wrote", args.output)
    if args.write_vocab:
        vocab_path = Path(str(args.output) + ".vocab.txt")
        vocab_path.write_text(
            "".join(t + "\n" for t in vocab.id_to_token))
        print("wrote", vocab_path)


if __name__ == "__main__":
    main()
