import pytest

from models.summarizer import summarize
from rewards.reward import RewardBreakdown, RewardWeights, make_reward_fn, total_reward


class TestRewardBreakdown:
    def test_default_weights(self):
        weights = RewardWeights()
        assert (weights.w_cov, weights.w_flu) == (1.0, 2.0)

    def test_combination(self):
        assert RewardBreakdown.combine(0.5, 0.25, RewardWeights()).total == pytest.approx(1.0)

    def test_fluency_weight_zero(self):
        assert RewardBreakdown.combine(0.4, 3.0, RewardWeights(w_flu=0.0)).total == pytest.approx(0.4)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            RewardWeights(w_cov=-1.0)


class TestTotalReward:
    def test_summary_equal_to_document(self, corpus, reward_deps):
        doc = corpus[0]
        breakdown = total_reward(doc, doc.tokens, None, reward_deps)
        assert breakdown.coverage >= 0.999
        assert breakdown.total == pytest.approx(breakdown.coverage + 2.0 * breakdown.fluency)

    def test_reward_fn_accepts_candidates(self, corpus, reward_deps, toy_model, indexed):
        _, compressive = summarize(toy_model, indexed[0], 2, 5)
        reward_fn = make_reward_fn(reward_deps, RewardWeights(1.0, 0.0))
        breakdown = reward_fn(corpus[0], compressive)
        assert breakdown.total == pytest.approx(breakdown.coverage)
        assert breakdown.coverage <= 1.0

    def test_empty_summary_rejected(self, corpus, reward_deps):
        with pytest.raises(ValueError, match="empty summary"):
            total_reward(corpus[0], [], RewardWeights(), reward_deps)
