"""Command-line entry point: tokenization, decoding, and benchmarking.

Exit codes: 0 on success, 1 on usage errors (bad or missing flags), 2 on
data errors (unreadable checkpoints, untokenizable input) with file and
line context.  All output for identical inputs and flags is byte
identical; the decode subcommand's stats omit wall time for that reason.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

from .bench import StrategyConfig, acceptance_rate, run_bench, run_strategy
from .checkpoint import load_checkpoint, read_header_json
from .decoding import DecodeResult
from .errors import SpecdecError
from .model import TransformerModel
from .oracle import OracleModel, load_oracle_spec
from .tokenizer import Vocabulary, build_vocabulary, tokenize


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for data
    # errors, so route usage failures through our own exception instead
    def error(self, message):
        raise UsageError(message)


def _name(path: str | None) -> str:
    return "<stdin>" if path in (None, "-") else path


@contextmanager
def _reading(path: str | None):
    # data-error messages must say which file failed; the underlying
    # errors carry line/column or tensor context but not the path
    try:
        yield
    except (SpecdecError, ValueError) as e:
        raise SpecdecError(f"{_name(path)}: {e}") from e


def _read_text(path: str | None) -> str:
    return sys.stdin.read() if path in (None, "-") else Path(path).read_text()


def _source_lines(path: str | None) -> list[tuple[int, str]]:
    """Non-blank input lines with their original 1-based line numbers."""
    return [(i, line.strip())
            for i, line in enumerate(_read_text(path).splitlines(), start=1)
            if line.strip()]


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", default=None, help="input file (default stdin)")
    p.add_argument("--output", default=None, help="output file (default stdout)")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--checkpoint", default=None,
                       help="model checkpoint file")
    group.add_argument("--oracle", default=None,
                       help="oracle spec JSON file (needs --vocab)")
    p.add_argument("--vocab", default=None,
                   help="vocabulary file, one token per line")
    p.add_argument("--max-len", type=int, default=256,
                   help="sequence ceiling for oracle models (default 256)")


def _add_strategy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--draft-length", type=int, default=10)
    p.add_argument("--max-drafts", type=int, default=25)
    p.add_argument("--beam-size", type=int, default=5)
    p.add_argument("--dilated-drafts", action="store_true",
                   help="take every other source token in each draft")
    p.add_argument("--max-iters", type=int, default=None,
                   help="iteration cap for sbs")
    p.add_argument("--jobs", type=int, default=1,
                   help="decode input lines on N worker threads")


def build_parser() -> _Parser:
    parser = _Parser(prog="specdec")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("tokenize", help="split SMILES lines into tokens")
    _add_io_flags(p)

    p = sub.add_parser("build-vocab", help="collect corpus tokens into a vocabulary")
    _add_io_flags(p)

    p = sub.add_parser("decode", help="decode SMILES lines to JSON")
    _add_io_flags(p)
    _add_model_flags(p)
    p.add_argument("--mode", choices=("greedy", "greedy-spec", "beam", "sbs"),
                   default="greedy")
    _add_strategy_flags(p)

    p = sub.add_parser("bench", help="compare strategies over a corpus")
    _add_io_flags(p)
    _add_model_flags(p)
    p.add_argument("--strategies", default="greedy,greedy-spec,beam,sbs",
                   help="comma-separated modes (first is the baseline)")
    p.add_argument("--repeats", type=int, default=1)
    _add_strategy_flags(p)

    p = sub.add_parser("model-info", help="print the checkpoint header JSON")
    p.add_argument("--checkpoint", required=True)
    return parser


def _load_model(args) -> tuple[object, Vocabulary]:
    if args.checkpoint is None and args.oracle is None:
        raise UsageError("one of --checkpoint or --oracle is required")
    if args.checkpoint is not None:
        with _reading(args.checkpoint):
            params, config, vocab = load_checkpoint(args.checkpoint)
        return TransformerModel(params, config), vocab
    if args.vocab is None:
        raise UsageError("--oracle requires --vocab")
    with _reading(args.oracle):
        spec = load_oracle_spec(args.oracle)
    with _reading(args.vocab):
        vocab = Vocabulary.load(args.vocab)
    return OracleModel(spec, len(vocab), args.max_len), vocab


def _strategy_from_args(args, mode: str) -> StrategyConfig:
    return StrategyConfig(
        mode=mode,
        draft_length=args.draft_length,
        max_drafts=args.max_drafts,
        beam_size=args.beam_size,
        dilated_drafts=args.dilated_drafts,
        max_iters=args.max_iters)


def _encode_corpus(lines: list[tuple[int, str]], vocab: Vocabulary,
                   path: str | None) -> list[list[int]]:
    with _reading(path):
        return [vocab.encode(tokenize(line, line=i), add_bos_eos=True)
                for i, line in lines]


def _decode_line_obj(line: str, result: DecodeResult,
                     vocab: Vocabulary) -> dict:
    return {
        "input": line,
        "outputs": [{"smiles": vocab.decode_to_string(h.ids),
                     "logProb": round(h.log_prob, 6)}
                    for h in result.hypotheses],
        "stats": {
            "forwardPasses": result.stats.forward_passes,
            "acceptedDraftTokens": result.stats.accepted_draft_tokens,
            "generatedTokens": result.stats.generated_tokens,
            "acceptanceRate": round(acceptance_rate(result.stats), 6),
        },
    }


def _cmd_tokenize(args) -> int:
    # one output line per input line, blanks preserved
    raw = _read_text(args.input).splitlines()
    with _reading(args.input):
        out = [" ".join(tokenize(line.strip(), line=i))
               for i, line in enumerate(raw, start=1)]
    _write_text(args.output, "".join(s + "\n" for s in out))
    return 0


def _cmd_build_vocab(args) -> int:
    raw = _read_text(args.input).splitlines()
    with _reading(args.input):
        vocab = build_vocabulary(raw)
    if args.output in (None, "-"):
        sys.stdout.write(vocab.to_bytes().decode("utf-8"))
    else:
        vocab.save(args.output)
    return 0


def _cmd_decode(args) -> int:
    model, vocab = _load_model(args)
    lines = _source_lines(args.input)
    sources = _encode_corpus(lines, vocab, args.input)
    strategy = _strategy_from_args(args, args.mode)

    def one(source):
        return run_strategy(model, source, strategy)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(one, sources))
    else:
        results = [one(s) for s in sources]
    out = [json.dumps(_decode_line_obj(line, r, vocab))
           for (_, line), r in zip(lines, results)]
    _write_text(args.output, "".join(s + "\n" for s in out))
    return 0


def _cmd_bench(args) -> int:
    model, vocab = _load_model(args)
    lines = _source_lines(args.input)
    sources = _encode_corpus(lines, vocab, args.input)
    try:
        strategies = [_strategy_from_args(args, mode.strip())
                      for mode in args.strategies.split(",") if mode.strip()]
        if not strategies:
            raise ValueError("--strategies must name at least one mode")
        report = run_bench(model, sources, strategies,
                           repeats=args.repeats, jobs=args.jobs)
    except ValueError as e:
        raise UsageError(str(e)) from e
    _write_text(args.output, report.to_jsonl())
    sys.stdout.write(report.table() + "\n")
    return 0


def _cmd_model_info(args) -> int:
    with _reading(args.checkpoint):
        header = read_header_json(args.checkpoint)
    sys.stdout.write(header + "\n")
    return 0


_COMMANDS = {
    "tokenize": _cmd_tokenize,
    "build-vocab": _cmd_build_vocab,
    "decode": _cmd_decode,
    "bench": _cmd_bench,
    "model-info": _cmd_model_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.subcommand](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e.filename}: no such file", file=sys.stderr)
        return 2
    except SpecdecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
