import os

import numpy as np
import pytest

from conftest import write_jsonl
from rewards.coverage import EXACT, coverage_plan
from utils.visualisation import export_transport_plan, plot_reward_curve, read_transport_matrix


@pytest.fixture
def plan(corpus, vocab, embeddings, stopwords):
    doc = corpus[0]
    return coverage_plan(vocab.encode(doc.tokens), vocab.encode(doc.sentences[0]), embeddings, vocab, stopwords,
                         EXACT)


class TestTransportExport:
    def test_matrix_round_trip_is_exact(self, plan, tmp_path):
        paths = export_transport_plan(plan, str(tmp_path), heatmap=False)
        doc_tokens, sum_tokens, values = read_transport_matrix(paths["matrix"])
        assert doc_tokens == plan.doc_tokens
        assert sum_tokens == plan.sum_tokens
        np.testing.assert_array_equal(values, plan.plan)

    def test_heatmap_written(self, plan, tmp_path):
        paths = export_transport_plan(plan, str(tmp_path / "plans"), stem="doc0")
        assert os.path.basename(paths["heatmap"]) == "doc0.png"
        assert os.path.getsize(paths["heatmap"]) > 0

    def test_unwritable_path(self, plan, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            export_transport_plan(plan, str(blocker / "sub"))


def test_reward_curve(tmp_path):
    rows = [{"step": i, "loss": 0.0, "r_sampled": 0.1 * i, "r_baseline": 0.05 * i, "cov": 0.5, "flu": 0.1}
            for i in range(1, 6)]
    metrics = write_jsonl(tmp_path / "metrics.jsonl", rows)
    path = plot_reward_curve(metrics, str(tmp_path / "curve.png"), window=2)
    assert os.path.getsize(path) > 0
