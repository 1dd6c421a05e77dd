# encoder.py
import torch
import torch.nn as nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence


def run_lstm(lstm, x, mask):
    """
    Run a batch-first LSTM over right-padded sequences so pad positions never
    feed the backward direction. Pad outputs are zero.
    """
    lengths = mask.sum(dim=1).cpu()
    packed = pack_padded_sequence(x, lengths, batch_first=True, enforce_sorted=False)
    out, _ = lstm(packed)
    out, _ = pad_packed_sequence(out, batch_first=True, total_length=x.size(1))
    return out


def check_finite(tensor):
    if not torch.isfinite(tensor).all():
        raise FloatingPointError("numerical overflow in encoder")
    return tensor


class AttentiveBiLSTM(nn.Module):
    def __init__(self, input_dim, hidden_size=150, num_layers=3, num_heads=4, dropout=0.0):
        """
        Bi-LSTM -> multi-head attention -> Bi-LSTM block.

        The first Bi-LSTM gives the contextual states (the attention queries),
        the attention keys/values are the raw inputs, and the concatenation of
        states and attention output is re-encoded by the second Bi-LSTM.

        Args:
            input_dim (int): Feature size of each input position.
            hidden_size (int): Hidden size per direction; output width is 2 * hidden_size.
            num_layers (int): Stacked layers in each Bi-LSTM.
            num_heads (int): Attention heads; must divide 2 * hidden_size.
            dropout (float): Dropout between stacked LSTM layers.
        """
        super(AttentiveBiLSTM, self).__init__()
        if (2 * hidden_size) % num_heads:
            raise ValueError(f"num_heads={num_heads} must divide 2*hidden_size={2 * hidden_size}")
        inner_dropout = dropout if num_layers > 1 else 0.0
        self.context_lstm = nn.LSTM(input_dim, hidden_size, num_layers, batch_first=True,
                                    bidirectional=True, dropout=inner_dropout)
        self.attention = nn.MultiheadAttention(2 * hidden_size, num_heads, batch_first=True,
                                               kdim=input_dim, vdim=input_dim)
        self.output_lstm = nn.LSTM(4 * hidden_size, hidden_size, num_layers, batch_first=True,
                                   bidirectional=True, dropout=inner_dropout)
        self.output_dim = 2 * hidden_size

    def forward(self, x, mask):
        """
        Args:
            x (Tensor): Inputs of shape (batch, seq_len, input_dim).
            mask (BoolTensor): True at real positions, shape (batch, seq_len); every
                row needs at least one real position.

        Returns:
            out (Tensor): Representations (batch, seq_len, 2 * hidden_size), zero at pads.
            weights (Tensor): Head-averaged attention weights (batch, seq_len, seq_len).
        """
        contextual = run_lstm(self.context_lstm, x, mask)
        attended, weights = self.attention(contextual, x, x, key_padding_mask=~mask,
                                           need_weights=True, average_attn_weights=True)
        out = run_lstm(self.output_lstm, torch.cat([contextual, attended], dim=-1), mask)
        out = out * mask.unsqueeze(-1).to(out.dtype)
        return check_finite(out), weights


class HierarchicalEncoder(nn.Module):
    def __init__(self, d_emb, hidden_size=150, num_layers=3, num_heads=4, n_max=50, dropout=0.0):
        """
        Two-level sentence encoder: an attentive Bi-LSTM over the words of each
        sentence, whose padded word grid is flattened into one local-context
        vector per sentence, followed by an attentive Bi-LSTM over sentences.
        """
        super(HierarchicalEncoder, self).__init__()
        self.word_level = AttentiveBiLSTM(d_emb, hidden_size, num_layers, num_heads, dropout)
        self.sentence_level = AttentiveBiLSTM(n_max * 2 * hidden_size, hidden_size, num_layers,
                                              num_heads, dropout)
        self.n_max = n_max
        self.output_dim = 2 * hidden_size

    def forward(self, embedded, word_mask, sentence_mask):
        """
        Args:
            embedded (Tensor): Word embeddings (M_max, N_max, d_emb).
            word_mask (BoolTensor): (M_max, N_max).
            sentence_mask (BoolTensor): (M_max,); real sentences form a prefix.

        Returns:
            Tensor: Sentence representations (M_max, 2 * hidden_size), zero rows for pad slots.
        """
        m_max = embedded.size(0)
        m = int(sentence_mask.sum())
        if m == 0:
            raise ValueError("empty document")
        words, _ = self.word_level(embedded[:m], word_mask[:m])
        local = words.reshape(1, m, -1)
        sentences, _ = self.sentence_level(local, sentence_mask[:m].unsqueeze(0))
        sentences = sentences[0]
        if m < m_max:
            sentences = torch.cat([sentences, sentences.new_zeros(m_max - m, sentences.size(1))], dim=0)
        return sentences
