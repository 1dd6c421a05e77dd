# coverage.py
import logging
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence

import numpy as np
import ot

from data.corpus import PAD_ID, UNK_ID, EmbeddingTable, Vocab

logger = logging.getLogger(__name__)

SINKHORN = "sinkhorn"
EXACT = "exact"
SOLVERS = (SINKHORN, EXACT)

_WORDLIKE = re.compile(r"\w")


@dataclass(frozen=True)
class TFDistribution:
    """
    Normalised stopword-free term frequency over a sorted support of token ids.
    """
    support: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return int(self.support.size)

    def as_dict(self, vocab: Optional[Vocab] = None) -> Dict:
        keys = vocab.decode(self.support.tolist()) if vocab is not None else self.support.tolist()
        return dict(zip(keys, self.weights.tolist()))


@dataclass
class SinkhornConfig:
    """
    Entropic OT settings. Epsilon is applied to the max-normalised cost and
    halved from eps_start down to eps_end, warm-starting each stage from the
    previous dual potentials. max_iters bounds each stage, so a full solve runs
    at most max_iters * len(schedule()) iterations.
    """
    eps_start: float = 0.1
    eps_end: float = 1e-3
    max_iters: int = 2000
    tol: float = 1e-6
    check_every: int = 10

    def schedule(self) -> List[float]:
        eps = [self.eps_start]
        while eps[-1] > self.eps_end:
            eps.append(max(eps[-1] / 2.0, self.eps_end))
        return eps


@dataclass
class TransportPlan:
    doc_tokens: List[str]
    sum_tokens: List[str]
    cost: np.ndarray
    plan: np.ndarray
    distance: float
    solver_meta: Dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return bool(self.solver_meta.get("converged", True))


def tf_distribution(tokens: Sequence[int], stopwords: FrozenSet[str], vocab: Vocab) -> TFDistribution:
    """
    Normalised term frequency of token ids without stopwords.

    PAD, UNK, stopwords and punctuation-only tokens are excluded from the support.

    Raises:
        ValueError: "empty distribution" when nothing survives the filtering.
    """
    counts = Counter()
    for token_id in tokens:
        token_id = int(token_id)
        if token_id in (PAD_ID, UNK_ID):
            continue
        token = vocab.id_to_token[token_id]
        if token in stopwords or not _WORDLIKE.search(token):
            continue
        counts[token_id] += 1
    if not counts:
        raise ValueError("empty distribution")
    support = np.array(sorted(counts), dtype=np.int64)
    weights = np.array([counts[i] for i in support], dtype=np.float64)
    return TFDistribution(support, weights / weights.sum())


def cost_matrix(support_d: Sequence[int], support_s: Sequence[int], emb: EmbeddingTable) -> np.ndarray:
    """
    Cosine transport cost c_ij = 1 - cos(v_i, v_j), clipped to [0, 2].

    A zero-norm embedding is treated as cosine 0 (cost 1) against everything.
    """
    vd = np.asarray(emb.matrix[np.asarray(support_d, dtype=np.int64)], dtype=np.float64)
    vs = np.asarray(emb.matrix[np.asarray(support_s, dtype=np.int64)], dtype=np.float64)
    nd = np.linalg.norm(vd, axis=1)
    ns = np.linalg.norm(vs, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = (vd @ vs.T) / np.outer(nd, ns)
    cos[~np.isfinite(cos)] = 0.0
    cost = np.clip(1.0 - cos, 0.0, 2.0)
    same = np.equal.outer(np.asarray(support_d), np.asarray(support_s)) & np.outer(nd > 0, ns > 0)
    cost[same] = 0.0
    return cost


def _marginal_error(plan, a, b):
    return float(max(np.abs(plan.sum(axis=1) - a).max(), np.abs(plan.sum(axis=0) - b).max()))


def sinkhorn_log(a, b, cost, config: Optional[SinkhornConfig] = None):
    """
    Stabilised log-domain Sinkhorn (POT) run over an epsilon schedule on the
    max-normalised cost, each stage warm-started from the previous dual potentials.

    Rows and columns with zero mass are dropped before solving and carry zero
    flow in the returned plan.

    Returns:
        (np.ndarray, dict): Plan and solver metadata (iterations, marginal_error,
        converged, final epsilon).
    """
    config = config or SinkhornConfig()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    rows, cols = a > 0, b > 0
    scale = float(cost.max()) if cost.size and cost.max() > 0 else 1.0
    normalized = np.ascontiguousarray(cost[np.ix_(rows, cols)] / scale)
    warmstart = None
    iterations = 0
    stages = []
    for eps in config.schedule():
        sub_plan, log = ot.bregman.sinkhorn_stabilized(
            a[rows], b[cols], normalized, eps, numItermax=config.max_iters, stopThr=config.tol,
            warmstart=warmstart, print_period=config.check_every, log=True, warn=False,
        )
        warmstart = log["warmstart"]
        iterations += int(log["n_iter"]) + 1
        plan = np.zeros((a.size, b.size))
        plan[np.ix_(rows, cols)] = sub_plan
        stages.append((plan, _marginal_error(plan, a, b), eps))
    feasible = [stage for stage in stages if stage[1] < config.tol]
    # smallest epsilon that met the tolerance, else the most feasible stage
    best_plan, best_err, best_eps = feasible[-1] if feasible else min(stages, key=lambda stage: stage[1])
    converged = best_err < config.tol
    if not converged:
        warnings.warn(f"Sinkhorn did not converge (marginal error {best_err:.2e})", RuntimeWarning)
    meta = {"solver": SINKHORN, "iterations": iterations, "marginal_error": best_err,
            "converged": converged, "epsilon": best_eps * scale}
    return best_plan, meta


def exact_ot(a, b, cost):
    """
    Exact optimal transport with POT's network simplex. Meant as a small-support oracle.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    plan, log = ot.emd(a, b, np.ascontiguousarray(cost, dtype=np.float64), log=True)
    if log.get("result_code", 1) != 1:
        raise RuntimeError(f"exact OT failed: {log.get('warning')}")
    plan = np.clip(plan, 0.0, None)
    meta = {"solver": EXACT, "iterations": 0, "marginal_error": _marginal_error(plan, a, b), "converged": True}
    return plan, meta


def solve_ot(p: TFDistribution, q: TFDistribution, cost: np.ndarray, solver: str = SINKHORN,
             config: Optional[SinkhornConfig] = None, vocab: Optional[Vocab] = None) -> TransportPlan:
    """
    Optimal transport between two TF distributions.

    Parameters:
        p, q (TFDistribution): Document and summary distributions.
        cost (np.ndarray): Finite non-negative cost, shape (len(p), len(q)).
        solver (str): "sinkhorn" or "exact".
        config (SinkhornConfig): Sinkhorn settings.
        vocab (Vocab): Used to label rows/columns with tokens.

    Returns:
        TransportPlan: distance is sum(t*_ij c_ij) with the unregularised cost.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.shape != (len(p), len(q)):
        raise ValueError(f"cost shape {cost.shape} does not match supports ({len(p)}, {len(q)})")
    if not np.all(np.isfinite(cost)) or (cost < 0).any():
        raise ValueError("cost must be finite and non-negative")
    if solver == SINKHORN:
        plan, meta = sinkhorn_log(p.weights, q.weights, cost, config)
    elif solver == EXACT:
        plan, meta = exact_ot(p.weights, q.weights, cost)
    else:
        raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}")
    if vocab is not None:
        doc_tokens = vocab.decode(p.support.tolist())
        sum_tokens = vocab.decode(q.support.tolist())
    else:
        doc_tokens = [str(i) for i in p.support.tolist()]
        sum_tokens = [str(i) for i in q.support.tolist()]
    return TransportPlan(doc_tokens, sum_tokens, cost, plan, float(np.sum(plan * cost)), meta)


def coverage_plan(doc_tokens, summary_tokens, emb: EmbeddingTable, vocab: Vocab, stopwords,
                  solver: str = SINKHORN, config: Optional[SinkhornConfig] = None) -> TransportPlan:
    """
    Transport plan from the document's TF distribution to the summary's.
    """
    p = tf_distribution(doc_tokens, stopwords, vocab)
    q = tf_distribution(summary_tokens, stopwords, vocab)
    return solve_ot(p, q, cost_matrix(p.support, q.support, emb), solver, config, vocab)


def coverage_reward(doc_tokens, summary_tokens, emb: EmbeddingTable, vocab: Vocab, stopwords,
                    solver: str = SINKHORN, config: Optional[SinkhornConfig] = None) -> float:
    """
    Semantic coverage 1 - d_W(TF_D, TF_S | C).

    A degenerate (empty after filtering) document or summary scores 0 with a warning.
    """
    try:
        plan = coverage_plan(doc_tokens, summary_tokens, emb, vocab, stopwords, solver, config)
    except ValueError as exc:
        if str(exc) != "empty distribution":
            raise
        warnings.warn("degenerate summary: empty term distribution, coverage set to 0", UserWarning)
        return 0.0
    return 1.0 - plan.distance


def top_flows(plan: TransportPlan, k: int = 3):
    """
    For every document token, the k summary tokens receiving most of its mass.

    Returns:
        list: (doc_token, [(summary_token, mass), ...]) ordered by the document token's total mass.
    """
    flows = []
    order = np.argsort(-plan.plan.sum(axis=1), kind="stable")
    for i in order:
        row = plan.plan[i]
        best = np.argsort(-row, kind="stable")[:k]
        flows.append((plan.doc_tokens[i], [(plan.sum_tokens[j], float(row[j])) for j in best if row[j] > 0]))
    return flows
