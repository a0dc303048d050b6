"""Atomwise SMILES tokenization and vocabulary handling.

The tokenizer splits a SMILES string into the community-standard atomwise
tokens: bracket atoms ``[...]`` are one token, the two-character halogens
``Cl`` and ``Br`` are one token, ``%NN`` ring closures are one token, and
everything else is a single character.  The vocabulary maps token strings to
integer ids, with four reserved ids at the front: PAD=0, BOS=1, EOS=2, UNK=3.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import IdOutOfRange, MalformedPadding, UntokenizableInput

# Atomwise SMILES token pattern. One alternation per token class:
# bracket atoms, Br/Cl, single-letter atoms (aromatic lowercase included),
# bonds/branches/charges, %NN ring closures, and single digits.
ATOMWISE_PATTERN = (
    r"(\[[^\]]+]|Br?|Cl?|N|O|S|P|F|I|b|c|n|o|s|p|\(|\)|\."
    r"|=|#|-|\+|\\|\/|:|~|@|\?|>|\*|\$|\%[0-9]{2}|[0-9])"
)

_TOKEN_RE = re.compile(ATOMWISE_PATTERN)

PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIAL_TOKENS = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3

# A token sequence is a plain list of vocabulary ids; PAD may only appear as
# a left-side prefix, and EOS, if present, is last.
TokenSequence = list


def tokenize(smiles: str, line: int | None = None) -> list[str]:
    """Split a SMILES string into atomwise tokens.

    The concatenation of the returned tokens always equals the input; any
    character span that matches no token class raises UntokenizableInput
    (carrying ``line`` for corpus context).
    """
    tokens: list[str] = []
    pos = 0
    for m in _TOKEN_RE.finditer(smiles):
        if m.start() != pos:
            raise UntokenizableInput(smiles, pos, line)
        tokens.append(m.group())
        pos = m.end()
    if pos != len(smiles):
        raise UntokenizableInput(smiles, pos, line)
    return tokens


@dataclass
class Vocabulary:
    """Bidirectional token-string <-> id map with fixed special ids."""

    id_to_token: list[str] = field(default_factory=lambda: list(SPECIAL_TOKENS))
    token_to_id: dict[str, int] = field(init=False)

    def __post_init__(self):
        if self.id_to_token[:4] != list(SPECIAL_TOKENS):
            raise ValueError(f"ids 0-3 must be {SPECIAL_TOKENS}")
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate token in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def add(self, token: str) -> int:
        if token in self.token_to_id:
            return self.token_to_id[token]
        self.id_to_token.append(token)
        self.token_to_id[token] = len(self.id_to_token) - 1
        return self.token_to_id[token]

    def encode(self, tokens: Sequence[str], add_bos_eos: bool = False) -> list[int]:
        """Map tokens to ids; unknown tokens become UNK."""
        ids = [self.token_to_id.get(t, UNK_ID) for t in tokens]
        if add_bos_eos:
            return [BOS_ID] + ids + [EOS_ID]
        return ids

    def decode(self, ids: Sequence[int], skip_specials: bool = False) -> list[str]:
        """Map ids back to tokens.

        With ``skip_specials`` PAD/BOS/EOS are dropped; UNK is kept so that
        unknown-token positions stay visible in the output.
        """
        out = []
        for i in ids:
            if not 0 <= i < len(self.id_to_token):
                raise IdOutOfRange(
                    f"id {i} outside vocabulary of size {len(self.id_to_token)}"
                )
            if skip_specials and i in (PAD_ID, BOS_ID, EOS_ID):
                continue
            out.append(self.id_to_token[i])
        return out

    def decode_to_string(self, ids: Sequence[int]) -> str:
        return "".join(self.decode(ids, skip_specials=True))

    # --- serialization: one token per line, line number == id ---

    def to_bytes(self) -> bytes:
        return "".join(t + "\n" for t in self.id_to_token).encode("utf-8")

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Vocabulary":
        lines = blob.decode("utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(id_to_token=lines)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_bytes(Path(path).read_bytes())


def build_vocabulary(corpus: Iterable[str]) -> Vocabulary:
    """Collect all distinct tokens of a corpus into a Vocabulary.

    Ids are assigned deterministically: specials first, then tokens in order
    of first appearance.  Tokenization errors carry the 1-based line number.
    """
    vocab = Vocabulary()
    for lineno, line in enumerate(corpus, start=1):
        line = line.strip()
        if not line:
            continue
        for token in tokenize(line, line=lineno):
            vocab.add(token)
    return vocab


def strip_specials(ids: Sequence[int]) -> list[int]:
    """Drop PAD/BOS/EOS, keeping UNK and ordinary tokens."""
    return [i for i in ids if i not in (PAD_ID, BOS_ID, EOS_ID)]


def check_token_sequence(ids: Sequence[int]) -> None:
    """Validate the PAD-prefix-only and EOS-last invariants."""
    seen_real = False
    for pos, i in enumerate(ids):
        if i == PAD_ID:
            if seen_real:
                raise MalformedPadding(f"interior PAD at position {pos}")
        else:
            seen_real = True
        if i == EOS_ID and pos != len(ids) - 1:
            raise MalformedPadding(f"EOS not final (position {pos})")
