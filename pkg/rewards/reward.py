# reward.py
import logging
from dataclasses import asdict, dataclass, field
from typing import FrozenSet, Optional, Sequence

from data.corpus import Document, EmbeddingTable, Vocab
from rewards.coverage import SINKHORN, SinkhornConfig, coverage_reward
from rewards.fluency import LanguageModelHandle, slor

logger = logging.getLogger(__name__)

DEFAULT_W_COV = 1.0
DEFAULT_W_FLU = 2.0


@dataclass(frozen=True)
class RewardWeights:
    w_cov: float = DEFAULT_W_COV
    w_flu: float = DEFAULT_W_FLU

    def __post_init__(self):
        if self.w_cov < 0 or self.w_flu < 0:
            raise ValueError("reward weights must be non-negative")


@dataclass(frozen=True)
class RewardBreakdown:
    coverage: float
    fluency: float
    total: float
    w_cov: float
    w_flu: float

    @classmethod
    def combine(cls, coverage: float, fluency: float, weights: RewardWeights) -> "RewardBreakdown":
        return cls(coverage, fluency, weights.w_cov * coverage + weights.w_flu * fluency,
                   weights.w_cov, weights.w_flu)

    def to_dict(self):
        return asdict(self)


@dataclass
class RewardDeps:
    """
    Everything the reward needs besides the texts.
    """
    emb: EmbeddingTable
    vocab: Vocab
    stopwords: FrozenSet[str]
    lm: LanguageModelHandle
    solver: str = SINKHORN
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)


def _tokens(summary) -> Sequence[str]:
    return getattr(summary, "token_list", summary)


def total_reward(doc: Document, compressive_summary, weights: Optional[RewardWeights],
                 deps: RewardDeps) -> RewardBreakdown:
    """
    Weighted sum of semantic coverage and SLOR fluency.

    Parameters:
        doc (Document): The full source document (coverage compares against all of it).
        compressive_summary: SummaryCandidate or plain token list.
        weights (RewardWeights): Defaults to w_cov = 1, w_flu = 2.
        deps (RewardDeps): Embeddings, vocabulary, stopwords, LM and solver settings.

    Returns:
        RewardBreakdown
    """
    weights = weights or RewardWeights()
    summary_tokens = list(_tokens(compressive_summary))
    coverage = coverage_reward(deps.vocab.encode(doc.tokens), deps.vocab.encode(summary_tokens), deps.emb,
                               deps.vocab, deps.stopwords, deps.solver, deps.sinkhorn)
    fluency = slor(summary_tokens, deps.lm)
    breakdown = RewardBreakdown.combine(coverage, fluency, weights)
    logger.debug("reward doc=%s cov=%.4f flu=%.4f total=%.4f", doc.id, coverage, fluency, breakdown.total)
    return breakdown


def make_reward_fn(deps: RewardDeps, weights: Optional[RewardWeights] = None):
    """
    Bind the reward dependencies into a (Document, summary) -> RewardBreakdown callable.
    """
    weights = weights or RewardWeights()

    def reward_fn(doc, summary):
        return total_reward(doc, summary, weights, deps)

    return reward_fn
