"""Draft extraction: sliding windows over the source token sequence."""

from __future__ import annotations

from dataclasses import dataclass

from .tokenizer import strip_specials


@dataclass(frozen=True)
class DraftSet:
    """Candidate draft sequences, all of length draft_length.

    draft_length=0 carries the singleton empty draft, which turns the
    speculative decoders into their plain counterparts.
    """

    drafts: tuple[tuple[int, ...], ...]
    draft_length: int
    max_drafts: int

    def __post_init__(self):
        if len(self.drafts) > self.max_drafts:
            raise ValueError("more drafts than max_drafts")
        for d in self.drafts:
            if len(d) != self.draft_length:
                raise ValueError("all drafts must have length draft_length")

    def __len__(self) -> int:
        return len(self.drafts)


def get_drafts(source, draft_length: int, max_drafts: int = 25,
               dilated: bool = False) -> DraftSet:
    """Slide a window of draft_length (stride 1) over the stripped source.

    BOS/EOS/PAD are removed first; windows are kept in left-to-right order,
    deduplicated keeping the first occurrence, and truncated to max_drafts.
    With ``dilated`` each window takes every second source token.  A source
    too short for a single window yields the singleton empty draft.
    """
    if draft_length < 0:
        raise ValueError("draft_length must be >= 0")
    if max_drafts < 1:
        raise ValueError("max_drafts must be >= 1")
    body = strip_specials(source)
    step = 2 if dilated else 1
    span = (draft_length - 1) * step + 1 if draft_length > 0 else 0
    windows: list[tuple[int, ...]] = []
    seen = set()
    if draft_length > 0:
        for start in range(len(body) - span + 1):
            w = tuple(body[start : start + span : step])
            if w not in seen:
                seen.add(w)
                windows.append(w)
            if len(windows) == max_drafts:
                break
    if not windows:
        windows = [()]
        draft_length = 0
    return DraftSet(drafts=tuple(windows), draft_length=draft_length,
                    max_drafts=max_drafts)
