import json

import pytest
import torch

from data.corpus import build_vocab, pad_and_index, random_embeddings, segment_document
from models.summarizer import UrlComSum
from rewards.fluency import build_ngram_lm
from rewards.reward import RewardDeps

TEXTS = [
    "The company filed for bankruptcy on Monday. Its loans were too large to repay. "
    "Banks refused new credit. Workers fear for their jobs.",
    "A storm hit the coast overnight. Thousands of homes lost power. Crews worked through the night. "
    "Schools will stay closed on Tuesday. Officials urged people to stay inside.",
    "The team won the final match. Fans celebrated in the streets.",
    "Scientists found water on a distant planet. The discovery could change how we search for life. "
    "More observations are planned next year.",
]

STOPWORDS = frozenset({"the", "a", "on", "its", "were", "to", "for", "their", "of", "in", "we", "are", "how",
                       "will", "could", "more", "too", "through"})

# Toy model dimensions shared by the model and training tests.
TOY = {"hidden_size": 8, "num_layers": 1, "num_heads": 2, "m_max": 4, "n_max": 6}
D_EMB = 8


@pytest.fixture
def corpus():
    return [segment_document(text, doc_id=str(i)) for i, text in enumerate(TEXTS)]


@pytest.fixture
def vocab(corpus):
    return build_vocab(corpus)


@pytest.fixture
def embeddings(vocab):
    return random_embeddings(vocab, D_EMB, seed=0)


@pytest.fixture
def stopwords():
    return STOPWORDS


@pytest.fixture
def toy_model(vocab, embeddings):
    torch.manual_seed(0)
    return UrlComSum(vocab, embeddings, **TOY)


@pytest.fixture
def indexed(corpus, vocab):
    return [pad_and_index(doc, vocab, TOY["m_max"], TOY["n_max"]) for doc in corpus]


@pytest.fixture
def reward_deps(corpus, vocab, embeddings, stopwords):
    return RewardDeps(embeddings, vocab, stopwords, build_ngram_lm(corpus, order=2))


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    return str(path)


@pytest.fixture
def train_file(tmp_path):
    return write_jsonl(tmp_path / "train.jsonl", [{"id": str(i), "document": t} for i, t in enumerate(TEXTS)])


@pytest.fixture
def eval_file(tmp_path):
    rows = [{"id": str(i), "document": t, "summary": t.split(". ")[0] + "."} for i, t in enumerate(TEXTS)]
    return write_jsonl(tmp_path / "test.jsonl", rows)
