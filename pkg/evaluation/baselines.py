# baselines.py
import torch

from data.corpus import Document
from models.pointer import PointerSequence
from models.summarizer import SENTENCE, WORD, SummaryCandidate

LEAD = "lead"


def _fixed_pointers(count):
    return PointerSequence(list(range(count)), torch.zeros(count), mode=LEAD)


def lead_baseline(doc: Document, l_e: int) -> SummaryCandidate:
    """
    The first L_E sentences of the document, in order.
    """
    if l_e < 1:
        raise ValueError("L_E must be >= 1")
    if not doc.sentences:
        raise ValueError("empty document")
    count = min(l_e, len(doc.sentences))
    tokens, positions = [], []
    for s, sentence in enumerate(doc.sentences[:count]):
        tokens.extend(sentence)
        positions.extend((s, w) for w in range(len(sentence)))
    return SummaryCandidate(SENTENCE, _fixed_pointers(count), tokens, positions)


def lead_word_baseline(doc: Document, l_c: int) -> SummaryCandidate:
    """
    The first L_C tokens of the document (the whole document when it is shorter).
    """
    if l_c < 1:
        raise ValueError("L_C must be >= 1")
    positions = [(s, w) for s, sentence in enumerate(doc.sentences) for w in range(len(sentence))][:l_c]
    if not positions:
        raise ValueError("empty document")
    tokens = [doc.sentences[s][w] for s, w in positions]
    return SummaryCandidate(WORD, _fixed_pointers(len(tokens)), tokens, positions)
