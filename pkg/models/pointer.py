# pointer.py
from dataclasses import dataclass, field
from typing import List, Optional

import torch
import torch.nn as nn
from torch.nn import init

INI = 1e-2
GREEDY = "greedy"
SAMPLED = "sampled"
MODES = (GREEDY, SAMPLED)


@dataclass
class PointerSequence:
    """
    Positions chosen by a pointer decoder.

    Fields:
        indices (list): Selected positions in selection order (pairwise distinct).
        step_log_probs (Tensor): Log-probability of each chosen index (keeps the graph).
        mode (str): "greedy", "sampled" or "forced" (teacher-forced re-scoring).
        truncated (bool): True when the budget exceeded the real positions.
        distributions (list): Detached per-step probability vectors.
    """
    indices: List[int]
    step_log_probs: torch.Tensor
    mode: str
    truncated: bool = False
    distributions: List[torch.Tensor] = field(default_factory=list)

    def __len__(self):
        return len(self.indices)

    @property
    def log_prob(self):
        return self.step_log_probs.sum()


class PointerDecoder(nn.Module):
    def __init__(self, input_dim, hidden_size=150):
        """
        LSTM pointer network with one glimpse.

        At each step the decoder state attends over the memory to get a context
        vector, the concatenation [state; context] is projected back to the state
        width, and the same (v, W1, W2) attention scores the projected query
        against the memory to give the pointer distribution.

        Args:
            input_dim (int): Width of the memory (encoder outputs).
            hidden_size (int): LSTM cell width.
        """
        super(PointerDecoder, self).__init__()
        self.start = nn.Parameter(torch.empty(input_dim))
        self.init_h = nn.Parameter(torch.empty(hidden_size))
        self.init_c = nn.Parameter(torch.empty(hidden_size))
        self.cell = nn.LSTMCell(input_dim, hidden_size)
        self.w1 = nn.Linear(input_dim, hidden_size, bias=False)
        self.w2 = nn.Linear(hidden_size, hidden_size, bias=False)
        self.v = nn.Parameter(torch.empty(hidden_size))
        self.glimpse_proj = nn.Linear(hidden_size + input_dim, hidden_size)
        init.uniform_(self.start, -0.1, 0.1)
        init.uniform_(self.init_h, -INI, INI)
        init.uniform_(self.init_c, -INI, INI)
        init.uniform_(self.v, -INI, INI)
        init.xavier_normal_(self.w1.weight)
        init.xavier_normal_(self.w2.weight)

    def _score(self, features, query):
        return torch.tanh(features + self.w2(query)) @ self.v

    def _walk(self, memory, mask, steps, choose):
        features = self.w1(memory)
        h = self.init_h.unsqueeze(0)
        c = self.init_c.unsqueeze(0)
        step_input = self.start.unsqueeze(0)
        selected = torch.zeros_like(mask)
        indices, log_probs, distributions = [], [], []
        for k in range(steps):
            h, c = self.cell(step_input, (h, c))
            glimpse = self._score(features, h[0]).masked_fill(~mask, float("-inf")).softmax(dim=-1)
            context = glimpse @ memory
            query = self.glimpse_proj(torch.cat([h[0], context], dim=-1))
            logits = self._score(features, query).masked_fill(~mask | selected, float("-inf"))
            step_log_probs = logits.log_softmax(dim=-1)
            idx = choose(k, step_log_probs)
            if not mask[idx] or selected[idx]:
                raise ValueError(f"pointer index {idx} is padding or already selected")
            indices.append(idx)
            log_probs.append(step_log_probs[idx])
            distributions.append(step_log_probs.detach().exp())
            selected = selected.clone()
            selected[idx] = True
            step_input = memory[idx].unsqueeze(0)
        stacked = torch.stack(log_probs) if log_probs else memory.new_zeros(0)
        return indices, stacked, distributions

    def decode(self, memory, mask, budget, mode=GREEDY, generator: Optional[torch.Generator] = None):
        """
        Select up to `budget` distinct real positions.

        Args:
            memory (Tensor): Position representations (seq_len, input_dim).
            mask (BoolTensor): True at real positions.
            budget (int): Number of positions to select (L >= 1).
            mode (str): "greedy" (argmax, ties to the lowest index) or "sampled".
            generator (torch.Generator): Source of randomness for sampling.

        Returns:
            PointerSequence: truncated=True when budget exceeds the real positions.
        """
        if budget < 1:
            raise ValueError("budget must be >= 1")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        available = int(mask.sum())
        if available == 0:
            raise ValueError("no real positions to point to")
        steps = min(budget, available)

        def choose(_, step_log_probs):
            if mode == GREEDY:
                return int(torch.argmax(step_log_probs))
            probs = step_log_probs.detach().exp()
            return int(torch.multinomial(probs, 1, generator=generator))

        indices, log_probs, distributions = self._walk(memory, mask, steps, choose)
        return PointerSequence(indices, log_probs, mode, truncated=budget > available,
                               distributions=distributions)

    def score_sequence(self, memory, mask, indices):
        """
        Teacher-forced log-probabilities of a fixed pointer sequence.
        """
        indices = list(indices)
        indices_, log_probs, distributions = self._walk(memory, mask, len(indices), lambda k, _: indices[k])
        return PointerSequence(indices_, log_probs, "forced", distributions=distributions)
