# summarizer.py
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

from data.corpus import (
    DEFAULT_M_MAX,
    DEFAULT_N_MAX,
    PAD_ID,
    Document,
    EmbeddingTable,
    IndexedDocument,
    Vocab,
    detokenize,
    pad_and_index,
)
from models.encoder import AttentiveBiLSTM, HierarchicalEncoder
from models.pointer import GREEDY, PointerDecoder, PointerSequence

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
SENTENCE = "sentence"
WORD = "word"


class CheckpointError(ValueError):
    pass


@dataclass
class SummaryCandidate:
    """
    A summary produced by one of the agents (or a baseline).

    Fields:
        level (str): "sentence" (extractive) or "word" (compressive).
        pointers (PointerSequence): The selection that produced it.
        token_list (list): Summary tokens. Word-level lists are in document order.
        positions (list): (sentence, word) document position of every token.
    """
    level: str
    pointers: PointerSequence
    token_list: List[str]
    positions: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def text(self) -> str:
        return detokenize(self.token_list)

    @property
    def sentence_indices(self) -> List[int]:
        return sorted({s for s, _ in self.positions})


class UrlComSum(nn.Module):
    def __init__(self, vocab: Vocab, embeddings: EmbeddingTable, hidden_size=150, num_layers=3,
                 num_heads=4, m_max=DEFAULT_M_MAX, n_max=DEFAULT_N_MAX, dropout=0.0):
        """
        Extractor and compressor agents sharing one frozen word-embedding table.

        Args:
            vocab (Vocab): Token index space of the embedding table.
            embeddings (EmbeddingTable): vocab_size x d_emb matrix.
            hidden_size (int): LSTM hidden size per direction (h).
            num_layers (int): Stacked Bi-LSTM layers at every level.
            num_heads (int): Attention heads at every level.
            m_max (int), n_max (int): Padded document shape.
        """
        super(UrlComSum, self).__init__()
        if len(embeddings) != vocab.size:
            raise ValueError(f"embedding rows ({len(embeddings)}) != vocab size ({vocab.size})")
        self.vocab = vocab
        self.config = {
            "hidden_size": hidden_size,
            "num_layers": num_layers,
            "num_heads": num_heads,
            "m_max": m_max,
            "n_max": n_max,
            "d_emb": embeddings.d_emb,
            "vocab_size": vocab.size,
            "dropout": dropout,
        }
        self.embedding = nn.Embedding.from_pretrained(torch.from_numpy(np.array(embeddings.matrix)),
                                                      freeze=True, padding_idx=PAD_ID)
        self.sentence_encoder = HierarchicalEncoder(embeddings.d_emb, hidden_size, num_layers,
                                                    num_heads, n_max, dropout)
        self.extractor = PointerDecoder(2 * hidden_size, hidden_size)
        self.word_encoder = AttentiveBiLSTM(embeddings.d_emb, hidden_size, num_layers, num_heads, dropout)
        self.compressor = PointerDecoder(2 * hidden_size, hidden_size)

    @property
    def m_max(self):
        return self.config["m_max"]

    @property
    def n_max(self):
        return self.config["n_max"]

    def agent_parameters(self, agent):
        """Trainable parameters of "extractor" or "compressor"."""
        if agent == "extractor":
            modules = (self.sentence_encoder, self.extractor)
        elif agent == "compressor":
            modules = (self.word_encoder, self.compressor)
        else:
            raise ValueError(f"unknown agent {agent!r}")
        return [p for m in modules for p in m.parameters()]

    def embeddings_table(self) -> EmbeddingTable:
        return EmbeddingTable(self.embedding.weight.detach().cpu().numpy())

    def save(self, path, extra=None):
        """
        Write a versioned checkpoint archive (parameters keyed by module path,
        config snapshot, vocabulary and any extra training state).
        """
        archive = {
            "format_version": CHECKPOINT_VERSION,
            "config": dict(self.config),
            "vocab": self.vocab.content_tokens(),
            "state_dict": self.state_dict(),
        }
        if extra:
            archive.update(extra)
        tmp_path = f"{path}.tmp"
        torch.save(archive, tmp_path)
        os.replace(tmp_path, path)
        logger.info("Checkpoint written to %s", path)

    @classmethod
    def load(cls, path, map_location="cpu"):
        """
        Returns:
            (UrlComSum, dict): The restored model and the raw archive.

        Raises:
            CheckpointError: On a version or parameter-shape mismatch.
        """
        archive = torch.load(path, map_location=map_location, weights_only=False)
        version = archive.get("format_version") if isinstance(archive, dict) else None
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: checkpoint version {version!r}, expected {CHECKPOINT_VERSION}")
        config = archive["config"]
        vocab = Vocab(archive["vocab"])
        if vocab.size != config["vocab_size"]:
            raise CheckpointError(f"{path}: vocabulary size does not match config")
        placeholder = EmbeddingTable(np.zeros((vocab.size, config["d_emb"]), dtype=np.float32))
        model = cls(vocab, placeholder, config["hidden_size"], config["num_layers"], config["num_heads"],
                    config["m_max"], config["n_max"], config.get("dropout", 0.0))
        try:
            model.load_state_dict(archive["state_dict"])
        except RuntimeError as exc:
            raise CheckpointError(f"{path}: {exc}") from exc
        return model, archive


def _generator(seed, generator):
    if generator is not None:
        return generator
    if seed is None:
        return None
    return torch.Generator().manual_seed(int(seed))


def encode_sentences(model: UrlComSum, idoc: IndexedDocument) -> torch.Tensor:
    """
    Sentence representations of shape (M_max, 2h); pad slots are zero rows.
    """
    device = model.embedding.weight.device
    ids = torch.as_tensor(idoc.ids, device=device)
    embedded = model.embedding(ids)
    word_mask = torch.as_tensor(idoc.word_mask, device=device)
    sentence_mask = torch.as_tensor(idoc.sentence_mask, device=device)
    return model.sentence_encoder(embedded, word_mask, sentence_mask)


def encode_words(model: UrlComSum, ids, mask=None, return_attention=False):
    """
    Word representations of shape (n_words, 2h) for one padded id sequence.
    """
    device = model.embedding.weight.device
    ids = torch.as_tensor(ids, device=device)
    mask = ids.ne(PAD_ID) if mask is None else torch.as_tensor(mask, device=device)
    if not mask.any():
        raise ValueError("empty word sequence")
    reps, weights = model.word_encoder(model.embedding(ids).unsqueeze(0), mask.unsqueeze(0))
    if return_attention:
        return reps[0], weights[0]
    return reps[0]


def decode_pointers(decoder: PointerDecoder, reps, mask, budget, mode=GREEDY, seed=None, generator=None):
    return decoder.decode(reps, torch.as_tensor(mask, device=reps.device), budget, mode,
                          _generator(seed, generator))


def extract(model: UrlComSum, idoc: IndexedDocument, l_e: int, mode=GREEDY, seed=None, generator=None):
    """
    Select L_E sentences; the candidate lists them in selection order.
    """
    if l_e < 1:
        raise ValueError("L_E must be >= 1")
    if idoc.sentence_count == 0:
        raise ValueError("empty document")
    reps = encode_sentences(model, idoc)
    pointers = decode_pointers(model.extractor, reps, idoc.sentence_mask, l_e, mode, seed, generator)
    tokens, positions = [], []
    for s in pointers.indices:
        tokens.extend(idoc.tokens[s])
        positions.extend((s, w) for w in range(len(idoc.tokens[s])))
    return SummaryCandidate(SENTENCE, pointers, tokens, positions)


def _compressor_input(model: UrlComSum, extractive: SummaryCandidate):
    order = sorted(range(len(extractive.positions)), key=lambda i: extractive.positions[i])
    tokens = [extractive.token_list[i] for i in order]
    positions = [extractive.positions[i] for i in order]
    return tokens, positions, model.vocab.encode(tokens)


def compress(model: UrlComSum, extractive: SummaryCandidate, l_c: int, mode=GREEDY, seed=None, generator=None):
    """
    Select L_C words from the extracted sentences (taken in document order) and
    reorder the chosen words by their position in the document.
    """
    if l_c < 1:
        raise ValueError("L_C must be >= 1")
    if not extractive.token_list:
        raise ValueError("extractive summary has no tokens")
    tokens, positions, ids = _compressor_input(model, extractive)
    device = model.embedding.weight.device
    mask = torch.ones(len(ids), dtype=torch.bool, device=device)
    reps = encode_words(model, ids, mask)
    pointers = decode_pointers(model.compressor, reps, mask, l_c, mode, seed, generator)
    chosen = sorted(pointers.indices)
    return SummaryCandidate(WORD, pointers, [tokens[i] for i in chosen], [positions[i] for i in chosen])


def summarize(model: UrlComSum, idoc: IndexedDocument, l_e: int, l_c: int, mode=GREEDY, seed=None,
              generator=None) -> Tuple[SummaryCandidate, SummaryCandidate]:
    """
    Extract-then-compress.

    Returns:
        (extractive, compressive) SummaryCandidates.
    """
    if idoc.sentence_count == 0:
        raise ValueError("empty document")
    generator = _generator(seed, generator)
    extractive = extract(model, idoc, l_e, mode, generator=generator)
    compressive = compress(model, extractive, l_c, mode, generator=generator)
    return extractive, compressive


def summarize_document(model: UrlComSum, doc: Document, l_e: int, l_c: int, mode=GREEDY, seed=None,
                       generator=None):
    return summarize(model, pad_and_index(doc, model.vocab, model.m_max, model.n_max), l_e, l_c, mode,
                     seed, generator)


def rollout_log_prob(model: UrlComSum, idoc: IndexedDocument, sentence_indices, word_indices):
    """
    Teacher-forced re-scoring of a full extract-then-compress rollout.

    Parameters:
        sentence_indices (list): Extractor pointer sequence (selection order).
        word_indices (list): Compressor pointer sequence over the document-ordered
            concatenation of the extracted sentences.

    Returns:
        (PointerSequence, PointerSequence): Extractor and compressor step log-probs.
    """
    reps = encode_sentences(model, idoc)
    mask = torch.as_tensor(idoc.sentence_mask, device=reps.device)
    extractor = model.extractor.score_sequence(reps, mask, sentence_indices)
    tokens, positions = [], []
    for s in sentence_indices:
        tokens.extend(idoc.tokens[s])
        positions.extend((s, w) for w in range(len(idoc.tokens[s])))
    extractive = SummaryCandidate(SENTENCE, extractor, tokens, positions)
    _, _, ids = _compressor_input(model, extractive)
    word_mask = torch.ones(len(ids), dtype=torch.bool, device=reps.device)
    word_reps = encode_words(model, ids, word_mask)
    compressor = model.compressor.score_sequence(word_reps, word_mask, word_indices)
    return extractor, compressor
