# report.py
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import pandas as pd

from data.corpus import Document, tokenize
from data.dataset import read_jsonl, sample_documents
from evaluation.baselines import lead_baseline, lead_word_baseline
from evaluation.rouge import RougeScores, rouge
from models.pointer import GREEDY
from models.summarizer import SummaryCandidate, UrlComSum, summarize_document

logger = logging.getLogger(__name__)

LEAD_ROW = "LEAD"
LEAD_WORD_ROW = "LEAD-WORD"
EXT_ROW = "URLComSum (Ext.)"
EXT_COM_ROW = "URLComSum (Ext.+Com.)"
MODEL_PREFIX = "model:"


@dataclass
class SummarizerHandle:
    """
    A named system under evaluation.

    Fields:
        name (str): Row label in the report.
        summarize (callable): Document -> SummaryCandidate.
        audit (callable): Optional Document -> bool, False when the compressive
            summary is not a position-ordered subset of the extracted sentences.
    """
    name: str
    summarize: Callable[[Document], SummaryCandidate]
    audit: Optional[Callable[[Document], bool]] = None


@dataclass
class EvalReport:
    dataset: str
    sample_size: int
    seed: int
    config_hash: str
    rows: Dict[str, RougeScores]
    compressive_violations: int = 0
    empty_documents: int = 0
    per_document: List[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.sample_size <= 0:
            raise ValueError("sample size must be positive")

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "sample_size": self.sample_size,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "rows": {name: scores.to_dict() for name, scores in self.rows.items()},
            "compressive_violations": self.compressive_violations,
            "empty_documents": self.empty_documents,
        }


def check_compressive(extractive: SummaryCandidate, compressive: SummaryCandidate, l_c: int) -> bool:
    """
    True when the compressive tokens are a position-ordered subset of the
    extracted sentences' tokens with at most L_C entries.
    """
    if len(compressive.token_list) > l_c or len(compressive.token_list) != len(compressive.positions):
        return False
    if any(a >= b for a, b in zip(compressive.positions, compressive.positions[1:])):
        return False
    available = dict(zip(extractive.positions, extractive.token_list))
    return all(available.get(pos) == token for pos, token in zip(compressive.positions, compressive.token_list))


def model_handles(model: UrlComSum, l_e: int, l_c: int, mode=GREEDY, seed=0) -> List[SummarizerHandle]:
    """
    The extractive and extract-then-compress rows of one trained model. Both rows
    share a single rollout of the document object most recently summarized, so
    documents that share an id are never confused.
    """
    last = {"doc": None, "rollout": None}

    def rollout(doc):
        if last["doc"] is not doc:
            last["doc"], last["rollout"] = doc, summarize_document(model, doc, l_e, l_c, mode, seed=seed)
        return last["rollout"]

    def audit(doc):
        extractive, compressive = rollout(doc)
        return check_compressive(extractive, compressive, l_c)

    return [
        SummarizerHandle(EXT_ROW, lambda doc: rollout(doc)[0]),
        SummarizerHandle(EXT_COM_ROW, lambda doc: rollout(doc)[1], audit),
    ]


def parse_systems(names: Sequence[str], l_e: int, l_c: int, mode=GREEDY, seed=0) -> List[SummarizerHandle]:
    """
    Resolve "lead", "leadword" and "model:<checkpoint>" into summarizer handles.
    """
    handles = []
    for name in names:
        key = name.strip()
        if key.lower() == "lead":
            handles.append(SummarizerHandle(LEAD_ROW, lambda doc: lead_baseline(doc, l_e)))
        elif key.lower() == "leadword":
            handles.append(SummarizerHandle(LEAD_WORD_ROW, lambda doc: lead_word_baseline(doc, l_c)))
        elif key.startswith(MODEL_PREFIX):
            model, _ = UrlComSum.load(key[len(MODEL_PREFIX):])
            model.eval()
            handles.extend(model_handles(model, l_e, l_c, mode, seed))
        else:
            raise ValueError(f"unknown system {name!r}: expected lead, leadword or model:<checkpoint>")
    if not handles:
        raise ValueError("no systems to evaluate")
    return handles


def _config_hash(dataset, sample_size, seed, names):
    payload = json.dumps({"dataset": os.path.basename(dataset), "sample_size": sample_size, "seed": seed,
                          "systems": list(names)}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def evaluate(dataset_path: str, systems: Sequence[SummarizerHandle], sample_size: Optional[int] = None,
             seed: int = 0) -> EvalReport:
    """
    Score every system against the reference summaries of a fixed-seed sample.

    Parameters:
        dataset_path (str): JSON-lines file with "document" and "summary" fields.
        systems (list): SummarizerHandles, one report row each.
        sample_size (int): Documents to sample (all when None).
        seed (int): Sampling seed.

    Returns:
        EvalReport: Mean ROUGE scores per system. Documents with no text score 0
        in every row and are counted in empty_documents.

    Raises:
        ValueError: If any sampled document has no reference summary.
    """
    docs = sample_documents(list(read_jsonl(dataset_path, with_summary=True)), sample_size, seed)
    if not docs:
        raise ValueError(f"{dataset_path}: no documents")
    references = []
    for doc in docs:
        reference = tokenize(doc.source_summary or "")
        if not reference:
            raise ValueError(f"{dataset_path}: missing references (document {doc.id})")
        references.append(reference)

    logger.info("Evaluating %s on %d documents", ", ".join(s.name for s in systems), len(docs))
    records, violations, empty = [], 0, 0
    # document-major so the rows of one model share its rollout
    for doc, reference in zip(docs, references):
        if not doc.sentences:
            empty += 1
            logger.warning("Document %s has no text; every system scores 0 on it", doc.id)
        for system in systems:
            hypothesis = system.summarize(doc).token_list if doc.sentences else []
            scores = rouge(hypothesis, reference)
            records.append({"system": system.name, "doc_id": doc.id, **scores.to_dict()})
            if doc.sentences and system.audit is not None and not system.audit(doc):
                violations += 1
                logger.warning("%s: compressive summary of document %s is not a subset of its extraction",
                               system.name, doc.id)

    df = pd.DataFrame(records)
    means = df.drop(columns="doc_id").groupby("system", sort=False).mean()
    rows = {name: RougeScores(**{k: float(v) for k, v in row.items()}) for name, row in means.iterrows()}
    names = [s.name for s in systems]
    return EvalReport(os.path.basename(dataset_path), len(docs), seed,
                      _config_hash(dataset_path, sample_size, seed, names), rows, violations, empty, records)


def format_table(report: EvalReport) -> str:
    """
    Plain-text table with one row per system: ROUGE-1, ROUGE-2 and ROUGE-L F-scores.
    """
    df = pd.DataFrame(
        [[name, s.rouge1_f, s.rouge2_f, s.rougeL_f] for name, s in report.rows.items()],
        columns=["System", "R-1", "R-2", "R-L"],
    )
    header = f"Dataset: {report.dataset}  (n={report.sample_size}, seed={report.seed}, config={report.config_hash})"
    return header + "\n" + df.to_string(index=False, float_format=lambda v: f"{v:.1f}")


def write_report(report: EvalReport, out_dir, stem="report"):
    """
    Write the table (.txt) and the JSON sidecar (.json) and return both paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    table_path = os.path.join(out_dir, f"{stem}.txt")
    json_path = os.path.join(out_dir, f"{stem}.json")
    with open(table_path, "w", encoding="utf-8") as f:
        f.write(format_table(report) + "\n")
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
    logger.info("Report written to %s", out_dir)
    return {"table": table_path, "json": json_path}
