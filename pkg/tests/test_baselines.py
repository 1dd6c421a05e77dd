import pytest

from data.corpus import segment_document
from evaluation.baselines import lead_baseline, lead_word_baseline


class TestLead:
    def test_first_sentences(self, corpus):
        summary = lead_baseline(corpus[1], 3)
        assert summary.token_list == [t for s in corpus[1].sentences[:3] for t in s]
        assert summary.sentence_indices == [0, 1, 2]

    def test_short_document(self):
        doc = segment_document("Only one sentence here.")
        assert lead_baseline(doc, 3).token_list == doc.sentences[0]

    def test_rejects_zero_budget(self, corpus):
        with pytest.raises(ValueError):
            lead_baseline(corpus[0], 0)


class TestLeadWord:
    @pytest.mark.parametrize("l_c", [1, 5, 26])
    def test_prefix(self, corpus, l_c):
        summary = lead_word_baseline(corpus[0], l_c)
        assert summary.token_list == corpus[0].tokens[:l_c]
        assert len(summary.token_list) <= l_c

    def test_short_document_whole(self):
        doc = segment_document("Short text.")
        assert lead_word_baseline(doc, 24).token_list == ["short", "text", "."]

    def test_empty_document(self):
        with pytest.raises(ValueError, match="empty document"):
            lead_word_baseline(segment_document(""), 5)
