import json
import math
import os

import pytest
import torch

from conftest import D_EMB, TOY
from data.corpus import segment_document
from models.pointer import SAMPLED
from models.summarizer import UrlComSum, rollout_log_prob
from rewards.reward import RewardBreakdown, RewardWeights
from training.config import TrainConfig
from training.scst import (
    AGENTS,
    TrainingExample,
    TrainState,
    agents_for_epoch,
    prepare_examples,
    scst_loss,
    scst_step,
    train,
)


def _reward(total):
    return RewardBreakdown.combine(total, 0.0, RewardWeights(w_flu=0.0))


def sampled_wins(doc, candidate):
    return _reward(1.0 if candidate.pointers.mode == SAMPLED else 0.0)


def constant(doc, candidate):
    return _reward(0.5)


def nan_reward(doc, candidate):
    return _reward(float("nan") if candidate.pointers.mode == SAMPLED else 0.0)


@pytest.fixture
def state(toy_model):
    optimizer = torch.optim.AdamW([p for p in toy_model.parameters() if p.requires_grad], lr=1e-3,
                                  weight_decay=0.01)
    return TrainState(toy_model, optimizer, torch.Generator().manual_seed(0), l_e=2, l_c=5)


@pytest.fixture
def batch(corpus, indexed):
    return [TrainingExample(doc, idoc) for doc, idoc in zip(corpus[:2], indexed[:2])]


def _snapshot(model):
    return {name: p.detach().clone() for name, p in model.named_parameters()}


def _total_log_prob(model, example, rollout):
    with torch.no_grad():
        ext, comp = rollout_log_prob(model, example.idoc, rollout["sentence_indices"], rollout["word_indices"])
    return float(ext.log_prob + comp.log_prob)


class TestScstLoss:
    def test_zero_advantage_gives_zero_gradient(self, toy_model, indexed):
        ext, comp = rollout_log_prob(toy_model, indexed[0], [0, 1], [0, 2])
        scst_loss(ext.step_log_probs, comp.step_log_probs, 0.0).backward()
        for p in toy_model.parameters():
            if p.grad is not None:
                assert p.grad.abs().max().item() <= 1e-12

    def test_sign(self, toy_model, indexed):
        ext, comp = rollout_log_prob(toy_model, indexed[0], [0, 1], [0, 2])
        expected = -(ext.step_log_probs.mean() + comp.step_log_probs.mean()).item()
        assert scst_loss(ext.step_log_probs, comp.step_log_probs, 1.0).item() == pytest.approx(expected)

    def test_flipping_advantage_flips_loss_and_gradient(self, toy_model, indexed):
        ext, comp = rollout_log_prob(toy_model, indexed[0], [0, 1], [0, 2])
        positive = scst_loss(ext.step_log_probs, comp.step_log_probs, 0.7)
        negative = scst_loss(ext.step_log_probs, comp.step_log_probs, -0.7)
        assert positive.item() == -negative.item()
        params = [p for p in toy_model.parameters() if p.requires_grad]
        up = torch.autograd.grad(positive, params, retain_graph=True, allow_unused=True)
        down = torch.autograd.grad(negative, params, allow_unused=True)
        for g_up, g_down in zip(up, down):
            if g_up is not None:
                torch.testing.assert_close(g_up, -g_down)

    def test_needs_some_agent(self):
        with pytest.raises(ValueError):
            scst_loss(None, None, 1.0)


class TestScstStep:
    def test_positive_advantage_raises_sampled_log_prob(self, state, batch):
        batch = batch[:1]
        before_params = _snapshot(state.model)
        metrics = scst_step(batch, state, sampled_wins)
        assert not metrics.skipped
        assert metrics.r_sampled == 1.0 and metrics.r_baseline == 0.0
        for example, rollout in zip(batch, metrics.rollouts):
            assert _total_log_prob(state.model, example, rollout) > rollout["log_prob"]
        assert any(not torch.equal(before_params[n], p) for n, p in state.model.named_parameters())

    def test_equal_rewards_leave_parameters_unchanged(self, state, batch):
        before = _snapshot(state.model)
        metrics = scst_step(batch, state, constant)
        assert metrics.skipped
        for name, p in state.model.named_parameters():
            assert (p - before[name]).abs().max().item() <= 1e-12
        assert state.step == 1

    def test_non_finite_loss_is_skipped(self, state, batch):
        before = _snapshot(state.model)
        metrics = scst_step(batch, state, nan_reward)
        assert metrics.skipped and metrics.nonfinite
        for name, p in state.model.named_parameters():
            assert torch.equal(p, before[name])

    def test_staged_updates_one_agent(self, state, batch):
        state.agents = ("compressor",)
        before = _snapshot(state.model)
        scst_step(batch, state, sampled_wins)
        changed = {n.split(".")[0] for n, p in state.model.named_parameters() if not torch.equal(p, before[n])}
        assert changed <= {"word_encoder", "compressor"}
        assert changed

    def test_empty_batch(self, state):
        with pytest.raises(ValueError):
            scst_step([], state, constant)


def test_agent_schedule():
    joint = TrainConfig(epochs=4)
    staged = TrainConfig(epochs=4, schedule="staged")
    assert agents_for_epoch(joint, 3) == AGENTS
    assert [agents_for_epoch(staged, e) for e in range(4)] == [("extractor",)] * 2 + [("compressor",)] * 2


def test_prepare_examples_skips_empty(corpus, vocab):
    examples = prepare_examples(corpus + [segment_document("", doc_id="empty")], vocab, 4, 6)
    assert len(examples) == len(corpus)


def _toy_config(train_file, out_dir, **overrides):
    values = dict(train_path=train_file, out_dir=str(out_dir), hidden_size=TOY["hidden_size"],
                  num_layers=TOY["num_layers"], num_heads=TOY["num_heads"], M_max=TOY["m_max"],
                  N_max=TOY["n_max"], d_emb=D_EMB, L_E=2, L_C=5, batch_size=2, lm_order=2)
    values.update(overrides)
    return TrainConfig(**values)


def _metrics(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f]


class TestTrain:
    def test_writes_checkpoint_and_metrics(self, train_file, tmp_path):
        result = train(_toy_config(train_file, tmp_path / "run"))
        rows = _metrics(result.metrics_path)
        assert len(rows) == 2
        assert set(rows[0]) >= {"step", "loss", "r_sampled", "r_baseline", "cov", "flu"}
        model, archive = UrlComSum.load(result.checkpoint_path)
        assert archive["train_state"]["epoch"] == 1
        assert archive["train_config"]["L_C"] == 5
        assert math.isfinite(result.final_reward)

    def test_same_seed_same_run(self, train_file, tmp_path):
        first = train(_toy_config(train_file, tmp_path / "a"))
        second = train(_toy_config(train_file, tmp_path / "b"))
        assert _metrics(first.metrics_path) == _metrics(second.metrics_path)

    def test_resume_continues_like_an_uninterrupted_run(self, train_file, tmp_path):
        full = train(_toy_config(train_file, tmp_path / "full", epochs=2))
        partial = train(_toy_config(train_file, tmp_path / "resumed", epochs=1))
        resumed = train(_toy_config(train_file, tmp_path / "resumed", epochs=2), resume=partial.checkpoint_path)
        assert resumed.steps == full.steps == 4
        assert _metrics(resumed.metrics_path) == _metrics(full.metrics_path)


@pytest.mark.slow
def test_greedy_reward_improves_with_training(tmp_path):
    path = os.environ.get("URLCOMSUM_TREND_TRAIN")
    if not path:
        pytest.skip("URLCOMSUM_TREND_TRAIN not set")
    improved = 0
    for seed in range(3):
        config = TrainConfig(train_path=path, out_dir=str(tmp_path / f"seed{seed}"), epochs=30, seed=seed,
                             max_documents=200)
        result = train(config)
        improved += result.final_reward - result.initial_reward >= 0.01
    assert improved >= 2
