"""Cross-implementation checks against the TypeScript trainer.

These tests consume the committed artifacts under trainer/fixtures/: a
trained checkpoint, held-out sources, the trainer's own greedy
transcripts, and fixed-position logit probes.  They skip as a group
when the fixtures have not been built (``npm run build && node
dist/cli.js export-fixtures`` in trainer/).
"""

import json
from pathlib import Path

import numpy as np
import pytest

from specdec import (
    TransformerModel,
    acceptance_rate,
    get_drafts,
    greedy,
    greedy_speculative,
    load_checkpoint,
    save_checkpoint,
    tokenize,
)

FIXTURES = Path(__file__).resolve().parent.parent / "trainer" / "fixtures"

pytestmark = pytest.mark.skipif(
    not (FIXTURES / "trained.ckpt").exists(),
    reason="trainer fixtures not built (see trainer/README section)")


@pytest.fixture(scope="module")
def trained():
    params, config, vocab = load_checkpoint(FIXTURES / "trained.ckpt")
    return TransformerModel(params, config), params, config, vocab


@pytest.fixture(scope="module")
def task():
    return json.loads((FIXTURES / "task.json").read_text())


def read_lines(name):
    return [l for l in (FIXTURES / name).read_text().splitlines() if l]


@pytest.fixture(scope="module")
def sources(trained):
    _, _, _, vocab = trained
    return [vocab.encode(tokenize(line), add_bos_eos=True)
            for line in read_lines("heldout_sources.txt")]


def test_checkpoint_bytes_roundtrip(trained, tmp_path):
    _, params, config, vocab = trained
    out = tmp_path / "roundtrip.ckpt"
    save_checkpoint(params, config, vocab, out)
    assert out.read_bytes() == (FIXTURES / "trained.ckpt").read_bytes()


def test_recorded_exact_match_meets_bar(task):
    assert task["heldOutExact"] >= 0.95


def test_greedy_matches_trainer_transcripts(trained, task, sources):
    model, _, _, vocab = trained
    texts = read_lines("trainer_greedy.txt")
    assert len(sources) == len(texts) == len(task["greedyIds"]) == 50
    for source, text, want_ids in zip(sources, texts, task["greedyIds"]):
        hyp = greedy(model, source).hypotheses[0]
        assert list(hyp.ids) == list(want_ids)
        assert vocab.decode_to_string(hyp.ids) == text


def test_logit_probes_close(trained):
    model, _, config, _ = trained
    probes = json.loads((FIXTURES / "logit_probes.json").read_text())
    assert len(probes) == 10
    for probe in probes:
        memory = model.encode_source(probe["source"])
        logits = model.decode_step([probe["prefix"]], [0], memory)
        got = logits[0, -1].astype(np.float64)
        want = np.asarray(probe["logits"], dtype=np.float64)
        assert got.shape == (config.vocab_size,)
        assert np.max(np.abs(got - want)) <= 1e-4


def test_speculative_equivalence_and_acceptance(trained, sources):
    model, _, _, _ = trained
    rates = []
    for source in sources:
        plain = greedy(model, source)
        spec = greedy_speculative(
            model, source, get_drafts(source, 10, max_drafts=25))
        assert spec.hypotheses[0].ids == plain.hypotheses[0].ids
        rates.append(acceptance_rate(spec.stats))
    assert len(rates) == 50
    assert sum(rates) / len(rates) >= 0.5
