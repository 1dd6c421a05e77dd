import json
import os

import pytest

from conftest import TEXTS, write_jsonl
from data.corpus import segment_document
from evaluation.report import (
    EXT_COM_ROW,
    EXT_ROW,
    LEAD_ROW,
    LEAD_WORD_ROW,
    check_compressive,
    evaluate,
    format_table,
    model_handles,
    parse_systems,
    write_report,
)
from models.summarizer import summarize, summarize_document
from training.config import get_profile


class TestEvaluate:
    def test_lead_on_reference_prefix(self, tmp_path):
        path = write_jsonl(tmp_path / "one.jsonl", [
            {"id": "d", "document": "The cat sat. The dog ran. Birds sang.", "summary": "The cat sat."},
        ])
        report = evaluate(path, parse_systems(["lead"], 1, 10))
        scores = report.rows[LEAD_ROW]
        assert (scores.rouge1_f, scores.rouge2_f, scores.rougeL_f) == (100.0, 100.0, 100.0)
        assert report.sample_size == 1

    def test_same_seed_same_report(self, eval_file):
        systems = parse_systems(["lead", "leadword"], 2, 10)
        first = evaluate(eval_file, systems, sample_size=3, seed=5)
        second = evaluate(eval_file, systems, sample_size=3, seed=5)
        assert first.to_dict() == second.to_dict()
        assert list(first.rows) == [LEAD_ROW, LEAD_WORD_ROW]

    def test_missing_references(self, train_file):
        with pytest.raises(ValueError, match="missing references"):
            evaluate(train_file, parse_systems(["lead"], 3, 58))

    def test_unknown_system(self):
        with pytest.raises(ValueError, match="unknown system"):
            parse_systems(["textrank"], 3, 58)

    def test_documents_sharing_an_id_keep_their_own_reference(self, tmp_path):
        path = write_jsonl(tmp_path / "dup.jsonl", [
            {"id": "x", "document": "Alpha beta gamma. Delta epsilon.", "summary": "Alpha beta gamma."},
            {"id": "x", "document": "Zeta eta theta. Iota kappa.", "summary": "Zeta eta theta."},
        ])
        report = evaluate(path, parse_systems(["lead"], 1, 3))
        assert report.rows[LEAD_ROW].rouge1_f == 100.0

    def test_empty_document_scores_zero_without_aborting(self, tmp_path, toy_model):
        checkpoint = str(tmp_path / "model.pt")
        toy_model.save(checkpoint)
        path = write_jsonl(tmp_path / "empty.jsonl", [
            {"id": "a", "document": "Alpha beta. Gamma.", "summary": "alpha beta"},
            {"id": "b", "document": "", "summary": "something"},
        ])
        report = evaluate(path, parse_systems(["lead", f"model:{checkpoint}"], 1, 5))
        assert report.empty_documents == 1
        assert report.sample_size == 2
        # "alpha beta ." against "alpha beta" is F = 80, averaged with 0
        assert report.rows[LEAD_ROW].rouge1_f == pytest.approx(40.0)
        assert set(report.rows) == {LEAD_ROW, EXT_ROW, EXT_COM_ROW}

    def test_model_rows_and_audit(self, eval_file, toy_model, tmp_path):
        checkpoint = str(tmp_path / "model.pt")
        toy_model.save(checkpoint)
        report = evaluate(eval_file, parse_systems([f"model:{checkpoint}"], 2, 5))
        assert list(report.rows) == [EXT_ROW, EXT_COM_ROW]
        assert report.compressive_violations == 0


class TestModelHandles:
    def test_rows_follow_the_document_object_not_its_id(self, toy_model):
        first = segment_document(TEXTS[0], doc_id="x")
        second = segment_document(TEXTS[2], doc_id="x")
        extractive_row, compressive_row = model_handles(toy_model, 2, 4)
        extractive_row.summarize(first)
        expected = summarize_document(toy_model, second, 2, 4, seed=0)
        assert extractive_row.summarize(second).token_list == expected[0].token_list
        assert compressive_row.summarize(second).token_list == expected[1].token_list
        assert set(compressive_row.summarize(second).token_list) <= set(second.tokens)


class TestCompressiveAudit:
    def test_valid_rollout(self, toy_model, indexed):
        extractive, compressive = summarize(toy_model, indexed[2], 2, 4)
        assert check_compressive(extractive, compressive, 4)

    def test_budget_exceeded(self, toy_model, indexed):
        extractive, compressive = summarize(toy_model, indexed[2], 2, 4)
        assert not check_compressive(extractive, compressive, len(compressive.token_list) - 1)

    def test_out_of_order(self, toy_model, indexed):
        extractive, compressive = summarize(toy_model, indexed[1], 2, 4)
        compressive.positions.reverse()
        compressive.token_list.reverse()
        assert not check_compressive(extractive, compressive, 4)


def test_report_files(eval_file, tmp_path):
    report = evaluate(eval_file, parse_systems(["lead"], 1, 10))
    paths = write_report(report, str(tmp_path / "out"))
    with open(paths["json"], encoding="utf-8") as f:
        payload = json.load(f)
    assert set(payload) == {"dataset", "sample_size", "seed", "config_hash", "rows", "compressive_violations",
                            "empty_documents"}
    assert set(payload["rows"][LEAD_ROW]) >= {"rouge1_f", "rouge2_f", "rougeL_f"}
    assert "LEAD" in format_table(report)


# Acceptance runs against real test splits; each env var names a JSON-lines file.
LEAD_TARGETS = [
    ("URLCOMSUM_CNNDM_TEST", "cnndm", (40.0, 17.5, 32.9), (39.7, 16.6, 32.5)),
    ("URLCOMSUM_NEWSROOM_TEST", "newsroom", (33.9, 23.2, 30.7), (34.9, 23.1, 30.7)),
    ("URLCOMSUM_XSUM_TEST", "xsum", (19.4, 2.4, 12.9), (18.3, 1.9, 12.8)),
]


@pytest.mark.slow
@pytest.mark.parametrize("env, profile, lead, lead_word", LEAD_TARGETS)
def test_lead_reproduction(env, profile, lead, lead_word):
    path = os.environ.get(env)
    if not path:
        pytest.skip(f"{env} not set")
    budgets = get_profile(profile)
    report = evaluate(path, parse_systems(["lead", "leadword"], budgets["L_E"], budgets["L_C"]),
                      sample_size=1000, seed=0)
    for row, target in ((LEAD_ROW, lead), (LEAD_WORD_ROW, lead_word)):
        scores = report.rows[row]
        for got, want in zip((scores.rouge1_f, scores.rouge2_f, scores.rougeL_f), target):
            assert abs(got - want) <= 2.0
