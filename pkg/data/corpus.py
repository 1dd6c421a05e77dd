# corpus.py
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

import numpy as np

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1

# Defaults sized to cover the per-document averages of the news datasets.
DEFAULT_M_MAX = 40
DEFAULT_N_MAX = 50
DEFAULT_D_EMB = 300

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+(?=[A-Z])")
_TOKEN = re.compile(r"\w+(?:['’]\w+)*|[^\w\s]")


@dataclass(frozen=True)
class Document:
    """
    A raw document together with its sentence/token segmentation.

    Fields:
        id (str): Dataset identifier.
        raw_text (str): Original text.
        sentences (list): One lowercased token list per sentence.
        source_summary (str or None): Reference summary, only populated for evaluation.
    """
    id: str
    raw_text: str
    sentences: List[List[str]]
    source_summary: Optional[str] = None

    @property
    def tokens(self) -> List[str]:
        return [token for sentence in self.sentences for token in sentence]

    def __len__(self) -> int:
        return len(self.sentences)


class Vocab:
    """
    Bijective token <-> id map with PAD at id 0 and UNK at id 1.
    """

    def __init__(self, tokens: Iterable[str]):
        self.id_to_token: List[str] = [PAD_TOKEN, UNK_TOKEN]
        self.token_to_id = {PAD_TOKEN: PAD_ID, UNK_TOKEN: UNK_ID}
        for token in tokens:
            if token in self.token_to_id:
                raise ValueError(f"duplicate vocabulary entry: {token!r}")
            self.token_to_id[token] = len(self.id_to_token)
            self.id_to_token.append(token)

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.lookup(token) for token in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.id_to_token[i] for i in ids]

    def content_tokens(self) -> List[str]:
        """Every entry except PAD and UNK, in id order."""
        return self.id_to_token[2:]


@dataclass(frozen=True)
class EmbeddingTable:
    matrix: np.ndarray

    @property
    def d_emb(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return int(self.matrix.shape[0])


@dataclass
class IndexedDocument:
    """
    Fixed-shape form of a document consumed by the agents.

    Fields:
        ids (np.ndarray): Token ids, shape (M_max, N_max); pad positions hold PAD_ID.
        sentence_mask (np.ndarray): True for real sentence slots, shape (M_max,).
        word_mask (np.ndarray): True for real word slots, shape (M_max, N_max).
        sentence_count (int): Number of real sentences kept.
        word_counts (list): Real word count of each kept sentence.
        tokens (list): The kept (truncated) sentence token lists.
        truncated_sentences (int): Sentences dropped beyond M_max.
        truncated_words (int): Words dropped beyond N_max over all kept sentences.
    """
    ids: np.ndarray
    sentence_mask: np.ndarray
    word_mask: np.ndarray
    sentence_count: int
    word_counts: List[int]
    tokens: List[List[str]] = field(default_factory=list)
    truncated_sentences: int = 0
    truncated_words: int = 0
    doc_id: str = ""

    @property
    def m_max(self) -> int:
        return int(self.ids.shape[0])

    @property
    def n_max(self) -> int:
        return int(self.ids.shape[1])


def tokenize(text: str) -> List[str]:
    """
    Lowercase whitespace tokenization with punctuation detached as separate tokens.
    """
    return _TOKEN.findall(text.lower())


def split_sentences(text: str) -> List[str]:
    """
    Split on terminal punctuation (., !, ?) followed by whitespace and a capital letter.
    The end of the text always closes the last sentence.
    """
    stripped = text.strip()
    if not stripped:
        return []
    return [part for part in _SENTENCE_BOUNDARY.split(stripped) if part.strip()]


def segment_document(raw_text: str, doc_id: str = "", source_summary: Optional[str] = None) -> Document:
    """
    Segment raw text into sentences of lowercased tokens.

    Parameters:
        raw_text (str): UTF-8 document text.
        doc_id (str): Identifier carried over to the Document.
        source_summary (str): Optional reference summary (evaluation only).

    Returns:
        Document: Empty or whitespace-only input yields a Document with zero sentences.
    """
    sentences = []
    for chunk in split_sentences(raw_text):
        tokens = tokenize(chunk)
        if tokens:
            sentences.append(tokens)
    return Document(id=doc_id, raw_text=raw_text, sentences=sentences, source_summary=source_summary)


def detokenize(tokens: Iterable[str]) -> str:
    return " ".join(tokens)


def build_vocab(corpus: Iterable[Document], min_count: int = 1) -> Vocab:
    """
    Build a vocabulary from a stream of documents.

    Tokens with frequency >= min_count are kept, ordered by frequency (descending)
    and then lexicographically, so rebuilding on the same corpus gives identical ids.

    Raises:
        ValueError: If the corpus contains no tokens.
    """
    counts = Counter()
    n_docs = 0
    for doc in corpus:
        n_docs += 1
        for sentence in doc.sentences:
            counts.update(sentence)
    if not counts:
        raise ValueError("empty corpus")
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    vocab = Vocab(kept)
    logger.info("Built vocabulary of %d entries from %d documents (min_count=%d)", vocab.size, n_docs, min_count)
    return vocab


def _uniform_rows(size: int, d_emb: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.05, 0.05, size=(size, d_emb)).astype(np.float32)
    matrix[PAD_ID] = 0.0
    return matrix


def random_embeddings(vocab: Vocab, d_emb: int = DEFAULT_D_EMB, seed: int = 0) -> EmbeddingTable:
    """
    Fixed-seed uniform(-0.05, 0.05) table for runs without a pre-trained embedding file.
    """
    return EmbeddingTable(_uniform_rows(vocab.size, d_emb, seed))


def load_embeddings(path: str, vocab: Vocab, d_emb: int = DEFAULT_D_EMB, seed: int = 0) -> EmbeddingTable:
    """
    Load GloVe-style text embeddings ("token v1 ... v_d", one entry per line).

    Parameters:
        path (str): Embedding file.
        vocab (Vocab): Vocabulary whose rows are filled.
        d_emb (int): Expected vector dimension.
        seed (int): Seed for the uniform(-0.05, 0.05) rows of tokens absent from the file.

    Returns:
        EmbeddingTable: PAD row is all zeros; rows found in the file are copied verbatim.

    Raises:
        ValueError: On a line whose dimension differs from d_emb (names the line number).
    """
    matrix = _uniform_rows(vocab.size, d_emb, seed)
    hits = 0
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            values = line.rstrip().split()
            if not values:
                continue
            if len(values) - 1 != d_emb:
                raise ValueError(f"line {line_no}: expected {d_emb} values, got {len(values) - 1}")
            token = values[0]
            idx = vocab.token_to_id.get(token)
            if idx is None or idx in (PAD_ID, UNK_ID):
                continue
            matrix[idx] = np.asarray(values[1:], dtype=np.float32)
            hits += 1
    logger.info("Loaded embeddings from %s: %d/%d vocabulary rows found", path, hits, vocab.size - 2)
    return EmbeddingTable(matrix)


def pad_and_index(doc: Document, vocab: Vocab, m_max: int = DEFAULT_M_MAX, n_max: int = DEFAULT_N_MAX) -> IndexedDocument:
    """
    Truncate and pad a document into an (M_max, N_max) id grid with masks.

    Sentences beyond m_max and words beyond n_max are dropped silently; the
    dropped amounts are reported on the returned IndexedDocument.
    """
    if m_max < 1 or n_max < 1:
        raise ValueError("m_max and n_max must be >= 1")
    ids = np.full((m_max, n_max), PAD_ID, dtype=np.int64)
    word_mask = np.zeros((m_max, n_max), dtype=bool)
    sentence_mask = np.zeros(m_max, dtype=bool)
    kept = doc.sentences[:m_max]
    word_counts = []
    tokens = []
    truncated_words = 0
    for i, sentence in enumerate(kept):
        words = sentence[:n_max]
        truncated_words += len(sentence) - len(words)
        ids[i, :len(words)] = vocab.encode(words)
        word_mask[i, :len(words)] = True
        sentence_mask[i] = True
        word_counts.append(len(words))
        tokens.append(list(words))
    return IndexedDocument(
        ids=ids,
        sentence_mask=sentence_mask,
        word_mask=word_mask,
        sentence_count=len(kept),
        word_counts=word_counts,
        tokens=tokens,
        truncated_sentences=len(doc.sentences) - len(kept),
        truncated_words=truncated_words,
        doc_id=doc.id,
    )
