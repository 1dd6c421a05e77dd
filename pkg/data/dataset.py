# dataset.py
import logging
import os
from pathlib import Path
from typing import FrozenSet, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd

from data.corpus import Document, segment_document

logger = logging.getLogger(__name__)

STOPWORDS_ENV = "URLCOMSUM_STOPWORDS"
DEFAULT_STOPWORDS_PATH = Path(__file__).with_name("stopwords.txt")


def read_jsonl(path: str, with_summary: bool = False) -> Iterator[Document]:
    """
    Read a JSON-lines dataset with keys "id", "document" and an optional "summary".

    Parameters:
        path (str): Dataset file.
        with_summary (bool): Attach reference summaries to the Documents. The
            training path always passes False so references never reach it.

    Yields:
        Document: One segmented document per line.

    Raises:
        ValueError: If a line has no "document" field.
    """
    df = pd.read_json(path, lines=True, dtype=False)
    if "document" not in df.columns:
        raise ValueError(f"{path}: line 1: missing 'document' field")
    missing = df["document"].isna()
    if missing.any():
        line_no = int(np.flatnonzero(missing.to_numpy())[0]) + 1
        raise ValueError(f"{path}: line {line_no}: missing 'document' field")
    has_ids = "id" in df.columns
    has_summaries = with_summary and "summary" in df.columns
    for row_no, row in enumerate(df.itertuples(index=False)):
        doc_id = str(row.id) if has_ids and not pd.isna(row.id) else str(row_no)
        summary = None
        if has_summaries and isinstance(row.summary, str):
            summary = row.summary
        yield segment_document(row.document, doc_id=doc_id, source_summary=summary)


def sample_documents(docs: Sequence[Document], sample_size: Optional[int], seed: int = 0) -> List[Document]:
    """
    Fixed-seed uniform sample without replacement, original order preserved.
    """
    docs = list(docs)
    if sample_size is None or sample_size >= len(docs):
        return docs
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(docs), size=sample_size, replace=False))
    return [docs[i] for i in chosen]


def corpus_statistics(docs: Sequence[Document]) -> dict:
    """
    Mean sentence and token counts per document (dataset statistics table).
    """
    df = pd.DataFrame({
        "sentences": [len(doc.sentences) for doc in docs],
        "tokens": [len(doc.tokens) for doc in docs],
    })
    if df.empty:
        return {"documents": 0, "mean_sentences": 0.0, "mean_tokens": 0.0}
    return {
        "documents": int(len(df)),
        "mean_sentences": float(df["sentences"].mean()),
        "mean_tokens": float(df["tokens"].mean()),
    }


def load_stopwords(path: Optional[str] = None) -> FrozenSet[str]:
    """
    Load a stopword list (one token per line, '#' starts a comment).

    The shipped list is used unless a path is given or URLCOMSUM_STOPWORDS is set.
    """
    resolved = path or os.environ.get(STOPWORDS_ENV) or DEFAULT_STOPWORDS_PATH
    with open(resolved, encoding="utf-8") as f:
        words = {line.strip().lower() for line in f}
    words = frozenset(w for w in words if w and not w.startswith("#"))
    logger.debug("Loaded %d stopwords from %s", len(words), resolved)
    return words
