# fluency.py
import logging
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Sequence

logger = logging.getLogger(__name__)

# log(1e-10): floor for unseen events.
LOG_FLOOR = math.log(1e-10)
BOS = "<s>"
# nltk's label for out-of-vocabulary tokens.
UNK = "<UNK>"


@dataclass(frozen=True)
class LanguageModelHandle:
    """
    Pluggable fluency model.

    Fields:
        scorer (callable): Token sequence -> natural-log probability log P_LM(S).
        unigram (dict): Token -> log P(t), normalised over the training vocabulary.
        name (str): Short description used in logs.
    """
    scorer: Callable[[Sequence[str]], float]
    unigram: Dict[str, float]
    name: str = "lm"

    def log_prob(self, tokens: Sequence[str]) -> float:
        return float(self.scorer(list(tokens)))

    def unigram_log_prob(self, token: str) -> float:
        return self.unigram.get(token, self.unigram.get(UNK, LOG_FLOOR))


def unigram_table(sentences: Iterable[Sequence[str]]) -> Dict[str, float]:
    """
    Add-one smoothed unigram log-probabilities over the observed vocabulary
    plus an <UNK> entry (count 0 + 1) that scores every unseen token.
    """
    counts = Counter()
    for sentence in sentences:
        counts.update(sentence)
    if not counts:
        raise ValueError("empty corpus")
    denominator = sum(counts.values()) + len(counts) + 1
    table = {token: math.log((count + 1) / denominator) for token, count in counts.items()}
    table[UNK] = math.log(1 / denominator)
    return table


def _sentences(documents) -> List[List[str]]:
    sentences = []
    for doc in documents:
        sentences.extend(list(s) for s in getattr(doc, "sentences", [doc]))
    return sentences


def unigram_lm(documents) -> LanguageModelHandle:
    """
    LM whose sequence score is the unigram log-probability (SLOR is then identically 0).
    """
    table = unigram_table(_sentences(documents))

    def score(tokens):
        return sum(table.get(t, table[UNK]) for t in tokens)

    return LanguageModelHandle(score, table, name="unigram")


def build_ngram_lm(documents, order: int = 3) -> LanguageModelHandle:
    """
    Interpolated Kneser-Ney n-gram LM trained on the sentences of a corpus.

    Parameters:
        documents: Documents (or token lists) to train on.
        order (int): n-gram order.

    Returns:
        LanguageModelHandle: Each token is scored given its (order-1)-token history,
        padded with <s>; per-token probabilities are floored at 1e-10.
    """
    from nltk.lm import KneserNeyInterpolated
    from nltk.lm.preprocessing import padded_everygram_pipeline

    sentences = _sentences(documents)
    table = unigram_table(sentences)
    train, vocab = padded_everygram_pipeline(order, sentences)
    model = KneserNeyInterpolated(order)
    model.fit(train, vocab)
    logger.info("Trained order-%d Kneser-Ney LM on %d sentences (%d types)", order, len(sentences), len(table) - 1)

    @lru_cache(maxsize=200_000)
    def token_log_prob(token, context):
        try:
            p = model.score(token, context)
        except ZeroDivisionError:
            p = 0.0
        return math.log(p) if p > 1e-10 else LOG_FLOOR

    def score(tokens):
        history = [BOS] * (order - 1)
        total = 0.0
        for token in tokens:
            total += token_log_prob(token, tuple(history[-(order - 1):]) if order > 1 else ())
            history.append(token)
        return total

    return LanguageModelHandle(score, table, name=f"kn{order}")


def gpt2_lm(unigram: Dict[str, float], model_name: str = "gpt2", device: str = "cpu") -> LanguageModelHandle:
    """
    GPT-2 scorer behind the same interface (requires the weights to be available locally).
    """
    import torch
    from transformers import AutoModelForCausalLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_name)
    model = AutoModelForCausalLM.from_pretrained(model_name).to(device)
    model.eval()

    def score(tokens):
        ids = tokenizer(" ".join(tokens), return_tensors="pt")["input_ids"].to(device)
        ids = torch.cat([torch.tensor([[tokenizer.bos_token_id]], device=device), ids], dim=1)
        with torch.no_grad():
            logits = model(ids).logits[0, :-1]
        log_probs = logits.log_softmax(dim=-1).gather(1, ids[0, 1:].unsqueeze(1))
        return float(log_probs.sum())

    return LanguageModelHandle(score, unigram, name=model_name)


def slor(summary_tokens: Sequence[str], lm: LanguageModelHandle) -> float:
    """
    Syntactic log-odds ratio: (log P_LM(S) - log P_U(S)) / |S|.

    Raises:
        ValueError: For an empty summary.
    """
    tokens = list(summary_tokens)
    if not tokens:
        raise ValueError("empty summary")
    log_unigram = sum(lm.unigram_log_prob(t) for t in tokens)
    return (lm.log_prob(tokens) - log_unigram) / len(tokens)
