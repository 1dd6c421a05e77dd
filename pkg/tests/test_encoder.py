import pytest
import torch

from models.encoder import AttentiveBiLSTM, HierarchicalEncoder


@pytest.fixture
def encoder():
    torch.manual_seed(0)
    return HierarchicalEncoder(d_emb=5, hidden_size=8, num_layers=1, num_heads=2, n_max=6).double()


def _inputs(m_real=2, m_max=4, n_max=6):
    torch.manual_seed(1)
    embedded = torch.randn(m_max, n_max, 5, dtype=torch.float64)
    word_mask = torch.zeros(m_max, n_max, dtype=torch.bool)
    word_mask[0, :4] = True
    word_mask[1, :6] = True
    sentence_mask = torch.tensor([i < m_real for i in range(m_max)])
    embedded = embedded * word_mask.unsqueeze(-1)
    return embedded, word_mask, sentence_mask


class TestAttentiveBiLSTM:
    def test_pad_outputs_are_zero(self):
        torch.manual_seed(0)
        block = AttentiveBiLSTM(5, hidden_size=8, num_layers=2, num_heads=4)
        x = torch.randn(2, 6, 5)
        mask = torch.tensor([[True] * 6, [True] * 3 + [False] * 3])
        out, weights = block(x, mask)
        assert out.shape == (2, 6, 16)
        assert torch.all(out[1, 3:] == 0)
        assert torch.all(weights[1, :, 3:] == 0)

    def test_heads_must_divide_width(self):
        with pytest.raises(ValueError):
            AttentiveBiLSTM(5, hidden_size=5, num_heads=4)


class TestHierarchicalEncoder:
    def test_shape_and_pad_rows(self, encoder):
        out = encoder(*_inputs())
        assert out.shape == (4, 16)
        assert torch.all(out[2:] == 0)

    def test_deterministic(self, encoder):
        inputs = _inputs()
        torch.testing.assert_close(encoder(*inputs), encoder(*inputs), rtol=0, atol=0)

    def test_empty_document(self, encoder):
        embedded, word_mask, _ = _inputs()
        with pytest.raises(ValueError, match="empty document"):
            encoder(embedded, word_mask, torch.zeros(4, dtype=torch.bool))

    def test_overflow_is_reported(self, encoder):
        embedded, word_mask, sentence_mask = _inputs()
        embedded[0, 0, 0] = float("nan")
        with pytest.raises(FloatingPointError, match="numerical overflow"):
            encoder(embedded, word_mask, sentence_mask)

    def test_embedding_gradient_matches_finite_differences(self, encoder):
        embedded, word_mask, sentence_mask = _inputs()
        embedded.requires_grad_(True)
        encoder(embedded, word_mask, sentence_mask).sum().backward()
        analytic = embedded.grad[1, 2, 3].item()
        step = 1e-4
        with torch.no_grad():
            plus, minus = embedded.detach().clone(), embedded.detach().clone()
            plus[1, 2, 3] += step
            minus[1, 2, 3] -= step
            numeric = (encoder(plus, word_mask, sentence_mask).sum()
                       - encoder(minus, word_mask, sentence_mask).sum()).item() / (2 * step)
        assert abs(analytic - numeric) <= 1e-3 * max(abs(analytic), abs(numeric), 1e-6)
