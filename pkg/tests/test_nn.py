"""Layer modules: parameter registry naming, and step == forward equivalence.

The streaming pipeline depends on every layer's ``step`` path producing
the same numbers as its batched ``forward``; these tests pin that layer
by layer so a drift shows up at the culprit, not end to end.
"""
import numpy as np
import pytest

from winnow.autograd.nn import (
    Conv2dCausal,
    ConvTranspose2dCausal,
    GRU,
    LayerNorm,
    Linear,
    LSTM,
    Module,
    ModuleList,
    MultiHeadAttention,
    PReLU,
)
from winnow.autograd.tensor import Tensor


def test_parameter_registry_uses_dotted_paths():
    class Inner(Module):
        def __init__(self):
            super().__init__()
            self.w = Tensor(np.zeros(2, dtype=np.float32), requires_grad=True)

    class Outer(Module):
        def __init__(self):
            super().__init__()
            self.lin = Linear(3, 2, np.random.default_rng(0))
            self.blocks = ModuleList([Inner(), Inner()])

    names = set(Outer().parameters())
    assert names == {"lin.weight", "lin.bias", "blocks.0.w", "blocks.1.w"}


def test_num_parameters_counts_scalars():
    lin = Linear(4, 3, np.random.default_rng(0))
    assert lin.num_parameters() == 4 * 3 + 3


def test_zero_grad_clears():
    lin = Linear(2, 2, np.random.default_rng(0))
    lin.weight.grad = np.ones((2, 2), dtype=np.float32)
    lin.zero_grad()
    assert lin.weight.grad is None


def _step_all(layer, x, state):
    outs = [layer.step(x[:, :, t], state) for t in range(x.shape[2])]
    return np.stack(outs, axis=2)


@pytest.mark.parametrize("kernel,stride,pad,dil", [((3, 2), (1, 1), 1, 1), ((5, 2), (2, 1), 2, 1), ((3, 3), (1, 1), 1, 4)])
def test_conv_step_matches_forward(kernel, stride, pad, dil):
    rng = np.random.default_rng(0)
    conv = Conv2dCausal(3, 4, kernel, rng, stride=stride, freq_pad=pad, time_dilation=dil)
    x = rng.standard_normal((3, 8, 11)).astype(np.float32)
    full = conv(Tensor(x)).data
    stepped = _step_all(conv, x, conv.make_state())
    np.testing.assert_allclose(stepped, full, atol=1e-6)


@pytest.mark.parametrize("kernel,s,p,op", [((3, 2), 2, 1, 1), ((5, 2), 2, 2, 1), ((3, 3), 1, 1, 0)])
def test_deconv_step_matches_forward(kernel, s, p, op):
    rng = np.random.default_rng(1)
    de = ConvTranspose2dCausal(3, 2, kernel, rng, freq_stride=s, freq_pad=p, freq_out_pad=op)
    x = rng.standard_normal((3, 6, 9)).astype(np.float32)
    full = de(Tensor(x)).data
    stepped = _step_all(de, x, de.make_state())
    np.testing.assert_allclose(stepped, full, atol=1e-6)


def test_lstm_step_matches_forward():
    rng = np.random.default_rng(2)
    lstm = LSTM(5, 4, rng)
    x = rng.standard_normal((9, 3, 5)).astype(np.float32)
    full = lstm(Tensor(x)).data
    state = lstm.make_state(3)
    stepped = np.stack([lstm.step(x[t], state) for t in range(9)])
    np.testing.assert_allclose(stepped, full, atol=1e-6)


def test_gru_step_matches_forward():
    rng = np.random.default_rng(3)
    gru = GRU(4, 6, rng)
    x = rng.standard_normal((7, 2, 4)).astype(np.float32)
    full = gru(Tensor(x)).data
    state = gru.make_state(2)
    stepped = np.stack([gru.step(x[t], state) for t in range(7)])
    np.testing.assert_allclose(stepped, full, atol=1e-6)


def test_bidirectional_scan_np_matches_forward():
    rng = np.random.default_rng(4)
    lstm = LSTM(3, 2, rng, bidirectional=True)
    x = rng.standard_normal((6, 2, 3)).astype(np.float32)
    np.testing.assert_allclose(lstm.scan_np(x), lstm(Tensor(x)).data, atol=1e-6)
    gru = GRU(3, 2, rng, bidirectional=True)
    np.testing.assert_allclose(gru.scan_np(x), gru(Tensor(x)).data, atol=1e-6)


def test_bidirectional_has_no_streaming_state():
    rng = np.random.default_rng(5)
    with pytest.raises(NotImplementedError):
        LSTM(3, 2, rng, bidirectional=True).make_state(1)
    with pytest.raises(NotImplementedError):
        GRU(3, 2, rng, bidirectional=True).make_state(1)


def test_attention_step_matches_forward_per_frame():
    rng = np.random.default_rng(6)
    attn = MultiHeadAttention(8, 2, rng, causal=False)
    x = rng.standard_normal((5, 7, 8)).astype(np.float32)  # [T, F, C]
    full = attn(Tensor(x)).data
    stepped = np.stack([attn.step_np(x[t]) for t in range(5)])
    np.testing.assert_allclose(stepped, full, atol=1e-5)


def test_norm_and_prelu_steps_match():
    rng = np.random.default_rng(7)
    ln = LayerNorm(6, axis=0)
    ln.gamma.data[:] = rng.standard_normal(6).astype(np.float32)
    ln.beta.data[:] = rng.standard_normal(6).astype(np.float32)
    pr = PReLU(6, channel_axis=0)
    x = rng.standard_normal((6, 4, 5)).astype(np.float32)
    full = pr(ln(Tensor(x))).data
    stepped = np.stack([pr.step_np(ln.step_np(x[:, :, t])) for t in range(5)], axis=2)
    np.testing.assert_allclose(stepped, full, atol=1e-6)


def test_linear_applies_last_axis():
    rng = np.random.default_rng(8)
    lin = Linear(4, 3, rng)
    x = rng.standard_normal((2, 5, 4)).astype(np.float32)
    got = lin(Tensor(x)).data
    want = x @ lin.weight.data.T + lin.bias.data
    np.testing.assert_allclose(got, want, atol=1e-6)
    np.testing.assert_allclose(lin.step_np(x), want, atol=1e-6)
