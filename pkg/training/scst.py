# scst.py
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import torch

from data.corpus import Document, IndexedDocument, build_vocab, load_embeddings, pad_and_index, random_embeddings
from data.dataset import load_stopwords, read_jsonl
from models.pointer import GREEDY, SAMPLED
from models.summarizer import CheckpointError, UrlComSum, summarize
from rewards.fluency import build_ngram_lm, gpt2_lm, unigram_table
from rewards.reward import RewardDeps, RewardWeights, make_reward_fn
from training.config import TrainConfig

logger = logging.getLogger(__name__)

AGENTS = ("extractor", "compressor")
CHECKPOINT_NAME = "checkpoint.pt"
METRICS_NAME = "metrics.jsonl"


class TrainingExample(NamedTuple):
    doc: Document
    idoc: IndexedDocument


@dataclass
class TrainState:
    """
    Mutable training state: parameters, AdamW moments, counters and RNG.
    """
    model: UrlComSum
    optimizer: torch.optim.Optimizer
    generator: torch.Generator
    l_e: int = 3
    l_c: int = 58
    grad_clip_norm: float = 2.0
    agents: Tuple[str, ...] = AGENTS
    step: int = 0
    epoch: int = 0
    batch_in_epoch: int = 0
    reward_mean: float = 0.0
    reward_count: int = 0

    def record_reward(self, value):
        self.reward_count += 1
        self.reward_mean += (value - self.reward_mean) / self.reward_count

    def to_dict(self):
        return {
            "optimizer": self.optimizer.state_dict(),
            "generator": self.generator.get_state(),
            "step": self.step,
            "epoch": self.epoch,
            "batch_in_epoch": self.batch_in_epoch,
            "reward_mean": self.reward_mean,
            "reward_count": self.reward_count,
        }

    def restore(self, saved):
        self.optimizer.load_state_dict(saved["optimizer"])
        self.generator.set_state(saved["generator"])
        self.step = saved["step"]
        self.epoch = saved["epoch"]
        self.batch_in_epoch = saved["batch_in_epoch"]
        self.reward_mean = saved["reward_mean"]
        self.reward_count = saved["reward_count"]


@dataclass
class StepMetrics:
    step: int
    loss: float
    r_sampled: float
    r_baseline: float
    cov: float
    flu: float
    skipped: bool = False
    nonfinite: bool = False
    rollouts: List[dict] = field(default_factory=list)

    def to_record(self):
        return {"step": self.step, "loss": self.loss, "r_sampled": self.r_sampled, "r_baseline": self.r_baseline,
                "cov": self.cov, "flu": self.flu, "skipped": self.skipped}


@dataclass
class TrainResult:
    checkpoint_path: str
    metrics_path: str
    steps: int
    initial_reward: Optional[float]
    final_reward: float


def scst_loss(extractor_log_probs, compressor_log_probs, advantage):
    """
    Self-critical loss for one document.

    -(R(sampled) - R(greedy)) * (mean extractor step log-prob + mean compressor step log-prob).
    Either log-prob tensor may be None to leave that agent out.
    """
    terms = [lp.mean() for lp in (extractor_log_probs, compressor_log_probs) if lp is not None and lp.numel()]
    if not terms:
        raise ValueError("no pointer log-probabilities to train")
    return -float(advantage) * torch.stack(terms).sum()


def scst_step(batch: Sequence[TrainingExample], state: TrainState, reward_fn: Callable) -> StepMetrics:
    """
    One self-critical update over a batch.

    Each document is summarized twice, once by sampling and once greedily
    (the baseline). Both compressive summaries are scored by reward_fn and
    the reward difference weights the sampled pointer log-probabilities of both
    agents. Rewards are plain floats, so no gradient flows through reward_fn.

    Batches whose reward differences are all zero, or whose loss is not finite,
    leave the parameters (and optimizer moments) untouched.
    """
    if not batch:
        raise ValueError("empty batch")
    model = state.model
    model.train()
    losses, rollouts = [], []
    r_sampled, r_baseline, cov, flu = [], [], [], []
    for example in batch:
        extractive, compressive = summarize(model, example.idoc, state.l_e, state.l_c, SAMPLED,
                                            generator=state.generator)
        with torch.no_grad():
            _, baseline = summarize(model, example.idoc, state.l_e, state.l_c, GREEDY)
        sampled_reward = reward_fn(example.doc, compressive)
        baseline_reward = reward_fn(example.doc, baseline)
        advantage = sampled_reward.total - baseline_reward.total
        ext_lp = extractive.pointers.step_log_probs if "extractor" in state.agents else None
        comp_lp = compressive.pointers.step_log_probs if "compressor" in state.agents else None
        losses.append((advantage, scst_loss(ext_lp, comp_lp, advantage)))
        r_sampled.append(sampled_reward.total)
        r_baseline.append(baseline_reward.total)
        cov.append(sampled_reward.coverage)
        flu.append(sampled_reward.fluency)
        rollouts.append({
            "doc_id": example.doc.id,
            "sentence_indices": list(extractive.pointers.indices),
            "word_indices": list(compressive.pointers.indices),
            "log_prob": float((extractive.pointers.log_prob + compressive.pointers.log_prob).detach()),
            "advantage": advantage,
        })
        state.record_reward(sampled_reward.total)

    state.step += 1
    loss = torch.stack([term for _, term in losses]).mean()
    metrics = StepMetrics(state.step, float(loss.detach()), float(np.mean(r_sampled)), float(np.mean(r_baseline)),
                          float(np.mean(cov)), float(np.mean(flu)), rollouts=rollouts)
    if not math.isfinite(metrics.loss):
        logger.warning("Step %d: non-finite loss, update skipped", state.step)
        metrics.skipped = metrics.nonfinite = True
        return metrics
    if all(advantage == 0 for advantage, _ in losses):
        logger.debug("Step %d: zero advantage, update skipped", state.step)
        metrics.skipped = True
        return metrics

    state.optimizer.zero_grad(set_to_none=True)
    loss.backward()
    params = [p for agent in state.agents for p in model.agent_parameters(agent)]
    torch.nn.utils.clip_grad_norm_(params, state.grad_clip_norm)
    state.optimizer.step()
    logger.debug("Step %d: loss=%.5f r_sampled=%.4f r_baseline=%.4f", state.step, metrics.loss,
                 metrics.r_sampled, metrics.r_baseline)
    return metrics


def prepare_examples(docs: Sequence[Document], vocab, m_max, n_max) -> List[TrainingExample]:
    examples = [TrainingExample(doc, pad_and_index(doc, vocab, m_max, n_max)) for doc in docs if doc.sentences]
    skipped = len(docs) - len(examples)
    if skipped:
        logger.info("Skipped %d empty documents", skipped)
    return examples


def mean_greedy_reward(model: UrlComSum, examples: Sequence[TrainingExample], reward_fn, l_e, l_c) -> float:
    """
    Mean total reward of the greedy compressive summaries over a set of documents.
    """
    model.eval()
    rewards = []
    with torch.no_grad():
        for example in examples:
            _, compressive = summarize(model, example.idoc, l_e, l_c, GREEDY)
            rewards.append(reward_fn(example.doc, compressive).total)
    return float(np.mean(rewards)) if rewards else 0.0


def load_training_documents(config: TrainConfig) -> List[Document]:
    """
    Documents only: references are never read on the training path.
    """
    docs = list(read_jsonl(config.train_path, with_summary=False))
    if config.max_documents is not None:
        docs = docs[:config.max_documents]
    if not docs:
        raise ValueError(f"{config.train_path}: no documents")
    return docs


def build_reward_deps(config: TrainConfig, docs, vocab, emb) -> RewardDeps:
    stopwords = load_stopwords(config.stopwords_path)
    if config.lm == "gpt2":
        lm = gpt2_lm(unigram_table(s for doc in docs for s in doc.sentences))
    else:
        lm = build_ngram_lm(docs, config.lm_order)
    return RewardDeps(emb, vocab, stopwords, lm)


def agents_for_epoch(config: TrainConfig, epoch: int) -> Tuple[str, ...]:
    """
    "joint" trains both agents every epoch; "staged" trains the extractor for the
    first half of the epochs and the compressor afterwards.
    """
    if config.schedule == "joint":
        return AGENTS
    return ("extractor",) if epoch < max(1, config.epochs // 2) else ("compressor",)


def save_checkpoint(state: TrainState, config: TrainConfig, path):
    state.model.save(path, extra={"train_state": state.to_dict(), "train_config": config.to_dict(),
                                  "seed": config.seed})


def train(config: TrainConfig, resume: Optional[str] = None) -> TrainResult:
    """
    Self-critical training of both agents.

    Parameters:
        config (TrainConfig): Run configuration.
        resume (str): Checkpoint to continue from (same config and data).

    Returns:
        TrainResult: Paths of the checkpoint and metrics log plus greedy reward trend.
    """
    config.validate()
    if not config.train_path:
        raise ValueError("train_path is required")
    os.makedirs(config.out_dir, exist_ok=True)
    torch.manual_seed(config.seed)

    docs = load_training_documents(config)
    vocab = build_vocab(docs, config.min_count)
    if config.embeddings_path:
        emb = load_embeddings(config.embeddings_path, vocab, config.d_emb, config.seed)
    else:
        emb = random_embeddings(vocab, config.d_emb, config.seed)
    reward_fn = make_reward_fn(build_reward_deps(config, docs, vocab, emb),
                               RewardWeights(config.w_cov, config.w_flu))

    model = UrlComSum(vocab, emb, config.hidden_size, config.num_layers, config.num_heads, config.M_max,
                      config.N_max, config.dropout)
    optimizer = torch.optim.AdamW([p for p in model.parameters() if p.requires_grad], lr=config.learning_rate,
                                  weight_decay=config.weight_decay)
    state = TrainState(model, optimizer, torch.Generator().manual_seed(config.seed), config.L_E, config.L_C,
                       config.grad_clip_norm)
    if resume:
        saved_model, archive = UrlComSum.load(resume)
        if "train_state" not in archive:
            raise CheckpointError(f"{resume}: no training state to resume from")
        if saved_model.vocab.id_to_token != vocab.id_to_token:
            raise CheckpointError(f"{resume}: vocabulary differs from the training data")
        model.load_state_dict(saved_model.state_dict())
        state.restore(archive["train_state"])
        logger.info("Resumed from %s at step %d (epoch %d)", resume, state.step, state.epoch)

    examples = prepare_examples(docs, vocab, config.M_max, config.N_max)
    checkpoint_path = os.path.join(config.out_dir, CHECKPOINT_NAME)
    metrics_path = os.path.join(config.out_dir, METRICS_NAME)
    initial_reward = None
    if state.step == 0:
        initial_reward = mean_greedy_reward(model, examples, reward_fn, config.L_E, config.L_C)
        logger.info("Initial mean greedy reward: %.4f", initial_reward)

    try:
        with open(metrics_path, "a" if resume else "w", encoding="utf-8") as metrics_log:
            for epoch in range(state.epoch, config.epochs):
                state.agents = agents_for_epoch(config, epoch)
                order = np.random.default_rng([config.seed, epoch]).permutation(len(examples))
                batches = [order[i:i + config.batch_size] for i in range(0, len(order), config.batch_size)]
                for b in range(state.batch_in_epoch, len(batches)):
                    metrics = scst_step([examples[i] for i in batches[b]], state, reward_fn)
                    state.batch_in_epoch = b + 1
                    metrics_log.write(json.dumps(metrics.to_record()) + "\n")
                    metrics_log.flush()
                    if config.checkpoint_every and state.step % config.checkpoint_every == 0:
                        save_checkpoint(state, config, checkpoint_path)
                state.epoch = epoch + 1
                state.batch_in_epoch = 0
                epoch_reward = mean_greedy_reward(model, examples, reward_fn, config.L_E, config.L_C)
                logger.info("Epoch %d/%d: mean greedy reward %.4f, running sampled reward %.4f",
                            epoch + 1, config.epochs, epoch_reward, state.reward_mean)
                save_checkpoint(state, config, checkpoint_path)
    except OSError:
        logger.error("I/O failure at step %d; last checkpoint kept at %s", state.step, checkpoint_path)
        raise

    final_reward = mean_greedy_reward(model, examples, reward_fn, config.L_E, config.L_C)
    if state.epoch == 0 or not os.path.exists(checkpoint_path):
        save_checkpoint(state, config, checkpoint_path)
    return TrainResult(checkpoint_path, metrics_path, state.step, initial_reward, final_reward)
