"""Inference engine for encoder-decoder SMILES models with speculative
decoding from source-substring drafts and speculative beam search."""

from .bench import BenchReport, StrategyConfig, acceptance_rate, run_bench, run_strategy
from .checkpoint import load_checkpoint, read_header_json, save_checkpoint
from .decoding import (
    DecodeResult,
    DecodeStats,
    Hypothesis,
    beam_search,
    greedy,
    greedy_speculative,
    speculative_beam_search,
)
from .drafting import DraftSet, get_drafts
from .model import ModelConfig, TransformerModel, random_params
from .oracle import OracleModel, OracleSpec, load_oracle_spec
from .tokenizer import Vocabulary, build_vocabulary, tokenize

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "DecodeResult",
    "DecodeStats",
    "DraftSet",
    "Hypothesis",
    "ModelConfig",
    "OracleModel",
    "OracleSpec",
    "StrategyConfig",
    "TransformerModel",
    "Vocabulary",
    "acceptance_rate",
    "beam_search",
    "build_vocabulary",
    "get_drafts",
    "greedy",
    "greedy_speculative",
    "load_checkpoint",
    "load_oracle_spec",
    "random_params",
    "read_header_json",
    "run_bench",
    "run_strategy",
    "save_checkpoint",
    "speculative_beam_search",
    "tokenize",
]
