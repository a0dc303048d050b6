"""Draft extraction tests."""

import pytest
from hypothesis import given, strategies as st

from specdec.drafting import DraftSet, get_drafts
from specdec.tokenizer import BOS_ID, EOS_ID, PAD_ID


class TestGetDrafts:
    def test_sliding_window(self):
        ds = get_drafts([5, 6, 7, 8, 9], 3)
        assert ds.drafts == ((5, 6, 7), (6, 7, 8), (7, 8, 9))

    def test_specials_stripped_first(self):
        ds = get_drafts([BOS_ID, 5, 6, 7, EOS_ID], 2)
        assert ds.drafts == ((5, 6), (6, 7))

    def test_pad_stripped(self):
        ds = get_drafts([PAD_ID, PAD_ID, BOS_ID, 5, 6, EOS_ID], 2)
        assert ds.drafts == ((5, 6),)

    def test_dedup_keeps_first(self):
        ds = get_drafts([5, 5, 5, 5], 2)
        assert ds.drafts == ((5, 5),)

    def test_dedup_order(self):
        ds = get_drafts([5, 6, 5, 6, 5], 2)
        assert ds.drafts == ((5, 6), (6, 5))

    def test_max_drafts_cap(self):
        ds = get_drafts(list(range(4, 40)), 3, max_drafts=7)
        assert len(ds) == 7
        assert ds.drafts[0] == (4, 5, 6)
        assert ds.drafts[-1] == (10, 11, 12)

    def test_length_zero_is_singleton_empty(self):
        ds = get_drafts([5, 6, 7], 0)
        assert ds.drafts == ((),)
        assert ds.draft_length == 0

    def test_short_source_is_singleton_empty(self):
        ds = get_drafts([5, 6], 5)
        assert ds.drafts == ((),)
        assert ds.draft_length == 0

    def test_window_count(self):
        ds = get_drafts(list(range(4, 14)), 4)
        assert len(ds) == 10 - 4 + 1

    def test_dilated_takes_every_second_token(self):
        ds = get_drafts([5, 6, 7, 8, 9], 3, dilated=True)
        assert ds.drafts == ((5, 7, 9),)

    def test_dilated_window_count(self):
        ds = get_drafts([5, 6, 7, 8, 9, 10], 2, dilated=True)
        assert ds.drafts == ((5, 7), (6, 8), (7, 9), (8, 10))

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            get_drafts([5, 6], -1)
        with pytest.raises(ValueError):
            get_drafts([5, 6], 1, max_drafts=0)


class TestDraftSet:
    def test_rejects_overfull(self):
        with pytest.raises(ValueError):
            DraftSet(drafts=((5,), (6,)), draft_length=1, max_drafts=1)

    def test_rejects_ragged(self):
        with pytest.raises(ValueError):
            DraftSet(drafts=((5, 6), (7,)), draft_length=2, max_drafts=5)


@given(
    body=st.lists(st.integers(4, 30), max_size=60),
    length=st.integers(0, 12),
    cap=st.integers(1, 30),
)
def test_draft_properties(body, length, cap):
    ds = get_drafts(body, length, max_drafts=cap)
    assert 1 <= len(ds) <= min(cap, max(1, len(body) - length + 1))
    assert len(set(ds.drafts)) == len(ds.drafts)
    for d in ds.drafts:
        assert len(d) == ds.draft_length
        # verbatim contiguous occurrence in the stripped source
        assert any(tuple(body[i : i + len(d)]) == d
                   for i in range(len(body) - len(d) + 1)) or d == ()
