# rouge.py
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class RougeScores:
    """
    ROUGE-1/2/L scores on a 0-100 scale. F is the harmonic mean of the P/R pair.
    """
    rouge1_p: float
    rouge1_r: float
    rouge1_f: float
    rouge2_p: float
    rouge2_r: float
    rouge2_f: float
    rougeL_p: float
    rougeL_r: float
    rougeL_f: float

    def f_scores(self):
        return {"rouge1_f": self.rouge1_f, "rouge2_f": self.rouge2_f, "rougeL_f": self.rougeL_f}

    def to_dict(self):
        return asdict(self)


def _prf(overlap, hyp_count, ref_count):
    if overlap == 0 or hyp_count == 0 or ref_count == 0:
        return 0.0, 0.0, 0.0
    p = overlap / hyp_count
    r = overlap / ref_count
    return 100.0 * p, 100.0 * r, 100.0 * 2 * p * r / (p + r)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def ngram_overlap(hyp: Sequence[str], ref: Sequence[str], n: int):
    """
    Clipped n-gram matches: each reference n-gram can be matched at most as often as it occurs.
    """
    hyp_grams, ref_grams = ngrams(hyp, n), ngrams(ref, n)
    overlap = sum((hyp_grams & ref_grams).values())
    return _prf(overlap, sum(hyp_grams.values()), sum(ref_grams.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    table = np.zeros((len(a) + 1, len(b) + 1), dtype=np.int64)
    for i, x in enumerate(a, 1):
        for j, y in enumerate(b, 1):
            table[i, j] = table[i - 1, j - 1] + 1 if x == y else max(table[i - 1, j], table[i, j - 1])
    return int(table[-1, -1])


def rouge(hypothesis: Sequence[str], reference: Sequence[str]) -> RougeScores:
    """
    ROUGE-1, ROUGE-2 and ROUGE-L between two token lists.

    No stemming or stopword removal; tokens are lowercased and punctuation is
    kept. ROUGE-L treats each summary as a single sequence.

    Raises:
        ValueError: If the reference is empty. An empty hypothesis scores zero.
    """
    ref = [t.lower() for t in reference]
    if not ref:
        raise ValueError("empty reference")
    hyp = [t.lower() for t in hypothesis]
    r1 = ngram_overlap(hyp, ref, 1)
    r2 = ngram_overlap(hyp, ref, 2)
    rl = _prf(lcs_length(hyp, ref), len(hyp), len(ref))
    return RougeScores(*r1, *r2, *rl)
