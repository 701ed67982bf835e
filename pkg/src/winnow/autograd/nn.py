"""Neural network layers on top of the autograd primitives.

Modules register parameters and submodules through attribute assignment,
and expose them as a flat dict keyed by dotted paths (the same names the
checkpoint format stores). Layers that can run frame by frame provide a
``step`` method operating on plain numpy arrays plus a state object; the
streaming pipeline uses those, the training path uses ``forward``.
"""
from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Tensor


def _uniform(rng: np.random.Generator, shape, bound: float) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


class Module:
    """Base class with parameter/submodule registries."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})

    def __setattr__(self, name, value):
        if not name.startswith("_"):
            if isinstance(value, Tensor):
                self._params[name] = value
            elif isinstance(value, Module):
                self._children[name] = value
        object.__setattr__(self, name, value)

    def parameters(self) -> dict[str, Tensor]:
        """All trainable tensors keyed by dotted module path."""
        out: dict[str, Tensor] = {}
        for name, p in self._params.items():
            out[name] = p
        for name, child in self._children.items():
            for sub, p in child.parameters().items():
                out[f"{name}.{sub}"] = p
        return out

    def num_parameters(self) -> int:
        return int(np.sum([p.data.size for p in self.parameters().values()]))

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.grad = None

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class ModuleList(Module):
    """Sequence of submodules registered under their index."""

    def __init__(self, modules=()):
        super().__init__()
        self._items = []
        for m in modules:
            self.append(m)

    def append(self, module: Module) -> None:
        self._children[str(len(self._items))] = module
        self._items.append(module)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Tensor(_uniform(rng, (out_features, in_features), bound), requires_grad=True)
        self.bias = Tensor(_uniform(rng, (out_features,), bound), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        y = F.matmul(x, F.transpose(self.weight))
        if self.bias is not None:
            y = F.add(y, self.bias)
        return y

    def step_np(self, x: np.ndarray) -> np.ndarray:
        y = x @ self.weight.data.T
        if self.bias is not None:
            y = y + self.bias.data
        return y


class LayerNorm(Module):
    """Layer normalization over one axis with learned per-position scale/shift."""

    def __init__(self, dim: int, axis: int = -1, eps: float = 1e-5):
        super().__init__()
        self.dim = dim
        self.axis = axis
        self.eps = eps
        self.gamma = Tensor(np.ones(dim, dtype=np.float32), requires_grad=True)
        self.beta = Tensor(np.zeros(dim, dtype=np.float32), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gamma, self.beta, axis=self.axis, eps=self.eps)

    def step_np(self, x: np.ndarray) -> np.ndarray:
        ax = self.axis % x.ndim
        shape = [1] * x.ndim
        shape[ax] = self.dim
        mu = x.mean(axis=ax, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=ax, keepdims=True)
        xhat = xc / np.sqrt(var + self.eps)
        return xhat * self.gamma.data.reshape(shape) + self.beta.data.reshape(shape)


class PReLU(Module):
    def __init__(self, channels: int, channel_axis: int = 0, init: float = 0.25):
        super().__init__()
        self.channel_axis = channel_axis
        self.alpha = Tensor(np.full(channels, init, dtype=np.float32), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return F.prelu(x, self.alpha, channel_axis=self.channel_axis)

    def step_np(self, x: np.ndarray) -> np.ndarray:
        shape = [1] * x.ndim
        shape[self.channel_axis % x.ndim] = self.alpha.data.shape[0]
        a = self.alpha.data.reshape(shape)
        return np.where(x > 0, x, a * x)


class Conv2dCausal(Module):
    """Conv over [C, F, T]: symmetric frequency padding, left-only time padding.

    step() consumes one frame [C, F] at a time, holding the previous
    (kT - 1) * dilation input frames in a ring buffer that starts as
    zeros, which reproduces the offline left padding exactly.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: tuple,
        rng: np.random.Generator,
        stride=(1, 1),
        freq_pad: int = 0,
        time_dilation: int = 1,
        bias: bool = True,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = tuple(kernel)
        self.stride = tuple(stride)
        self.freq_pad = freq_pad
        self.time_dilation = time_dilation
        kf, kt = self.kernel
        bound = 1.0 / np.sqrt(in_channels * kf * kt)
        self.weight = Tensor(_uniform(rng, (out_channels, in_channels, kf, kt), bound), requires_grad=True)
        self.bias = Tensor(_uniform(rng, (out_channels,), bound), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d_causal(
            x, self.weight, self.bias, stride=self.stride, freq_pad=self.freq_pad, time_dilation=self.time_dilation
        )

    def out_freq(self, in_freq: int) -> int:
        kf = self.kernel[0]
        return (in_freq + 2 * self.freq_pad - kf) // self.stride[0] + 1

    def make_state(self):
        return {"hist": None}

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        kf, kt = self.kernel
        sf, st = self.stride
        if st != 1:
            raise NotImplementedError("streaming conv requires time stride 1")
        pad_t = (kt - 1) * self.time_dilation
        if state["hist"] is None:
            state["hist"] = np.zeros((self.in_channels, x.shape[1], pad_t), dtype=np.float32)
        if pad_t:
            window = np.concatenate([state["hist"], x[:, :, None]], axis=2)
            state["hist"] = window[:, :, 1:]
        else:
            window = x[:, :, None]
        taps = window[:, :, :: self.time_dilation] if self.time_dilation > 1 else window
        # taps: [Cin, F, kT]; correlate over frequency with stride sf.
        xp = np.pad(taps, ((0, 0), (self.freq_pad, self.freq_pad), (0, 0)))
        v = sliding_window_view_freq(xp, kf)[:, ::sf]  # [Cin, F_out, kF, kT]
        fo = v.shape[1]
        cols = np.ascontiguousarray(v.transpose(0, 2, 3, 1)).reshape(self.in_channels * kf * kt, fo)
        y = (self.weight.data.reshape(self.out_channels, -1) @ cols).reshape(self.out_channels, fo)
        if self.bias is not None:
            y = y + self.bias.data[:, None]
        return y


def sliding_window_view_freq(x: np.ndarray, kf: int) -> np.ndarray:
    """Windows of height kf along axis 1 of [C, F, T] -> [C, F', kf, T]."""
    from numpy.lib.stride_tricks import sliding_window_view

    return sliding_window_view(x, kf, axis=1).transpose(0, 1, 3, 2)


class ConvTranspose2dCausal(Module):
    """Transposed conv upsampling frequency; time kernel looks backward only."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: tuple,
        rng: np.random.Generator,
        freq_stride: int = 1,
        freq_pad: int = 0,
        freq_out_pad: int = 0,
        bias: bool = True,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = tuple(kernel)
        self.freq_stride = freq_stride
        self.freq_pad = freq_pad
        self.freq_out_pad = freq_out_pad
        kf, kt = self.kernel
        bound = 1.0 / np.sqrt(in_channels * kf * kt)
        self.weight = Tensor(_uniform(rng, (in_channels, out_channels, kf, kt), bound), requires_grad=True)
        self.bias = Tensor(_uniform(rng, (out_channels,), bound), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d_transpose_causal(
            x,
            self.weight,
            self.bias,
            freq_stride=self.freq_stride,
            freq_pad=self.freq_pad,
            freq_out_pad=self.freq_out_pad,
        )

    def out_freq(self, in_freq: int) -> int:
        return (in_freq - 1) * self.freq_stride - 2 * self.freq_pad + self.kernel[0] + self.freq_out_pad

    def make_state(self):
        return {"hist": None}

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        kf, kt = self.kernel
        if state["hist"] is None:
            state["hist"] = np.zeros((self.in_channels, x.shape[1], kt - 1), dtype=np.float32)
        if kt > 1:
            window = np.concatenate([state["hist"], x[:, :, None]], axis=2)  # oldest..newest
            state["hist"] = window[:, :, 1:]
        else:
            window = x[:, :, None]
        f = x.shape[1]
        f_out = self.out_freq(f)
        f_buf = max((f - 1) * self.freq_stride + kf, self.freq_pad + f_out)
        out_full = np.zeros((self.out_channels, f_buf), dtype=np.float32)
        # Output frame t gathers w[.., j] * x[t - j]: newest frame pairs with j=0.
        for j in range(kt):
            frame = window[:, :, kt - 1 - j]
            for i in range(kf):
                contrib = self.weight.data[:, :, i, j].T @ frame
                out_full[:, i : i + f * self.freq_stride : self.freq_stride] += contrib
        y = out_full[:, self.freq_pad : self.freq_pad + f_out]
        if self.bias is not None:
            y = y + self.bias.data[:, None]
        return y


class LSTM(Module):
    """LSTM over [T, B, D] returning [T, B, H * directions]."""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator, bidirectional: bool = False):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.bidirectional = bidirectional
        bound = 1.0 / np.sqrt(hidden_size)
        self.w_ih = Tensor(_uniform(rng, (4 * hidden_size, input_size), bound), requires_grad=True)
        self.w_hh = Tensor(_uniform(rng, (4 * hidden_size, hidden_size), bound), requires_grad=True)
        self.b = Tensor(_uniform(rng, (4 * hidden_size,), bound), requires_grad=True)
        if bidirectional:
            self.w_ih_rev = Tensor(_uniform(rng, (4 * hidden_size, input_size), bound), requires_grad=True)
            self.w_hh_rev = Tensor(_uniform(rng, (4 * hidden_size, hidden_size), bound), requires_grad=True)
            self.b_rev = Tensor(_uniform(rng, (4 * hidden_size,), bound), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        fwd = F.lstm_scan(x, self.w_ih, self.w_hh, self.b)
        if not self.bidirectional:
            return fwd
        rev = F.lstm_scan(F.flip(x, axis=0), self.w_ih_rev, self.w_hh_rev, self.b_rev)
        return F.concat([fwd, F.flip(rev, axis=0)], axis=2)

    def scan_np(self, x: np.ndarray) -> np.ndarray:
        """Inference scan on plain arrays, matching forward()."""
        t_len, bsz = x.shape[0], x.shape[1]
        h = np.zeros((bsz, self.hidden_size), dtype=np.float32)
        c = np.zeros_like(h)
        ys = np.empty((t_len, bsz, self.hidden_size), dtype=np.float32)
        for t in range(t_len):
            h, c = F.lstm_step_np(x[t], h, c, self.w_ih.data, self.w_hh.data, self.b.data)
            ys[t] = h
        if not self.bidirectional:
            return ys
        hr = np.zeros((bsz, self.hidden_size), dtype=np.float32)
        cr = np.zeros_like(hr)
        ys_rev = np.empty_like(ys)
        for t in range(t_len - 1, -1, -1):
            hr, cr = F.lstm_step_np(x[t], hr, cr, self.w_ih_rev.data, self.w_hh_rev.data, self.b_rev.data)
            ys_rev[t] = hr
        return np.concatenate([ys, ys_rev], axis=2)

    def make_state(self, batch: int):
        if self.bidirectional:
            raise NotImplementedError("bidirectional LSTM has no streaming state")
        z = np.zeros((batch, self.hidden_size), dtype=np.float32)
        return {"h": z, "c": z.copy()}

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        h, c = F.lstm_step_np(x, state["h"], state["c"], self.w_ih.data, self.w_hh.data, self.b.data)
        state["h"], state["c"] = h, c
        return h


class GRU(Module):
    """GRU over [T, B, D] returning [T, B, H * directions]."""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator, bidirectional: bool = False):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.bidirectional = bidirectional
        bound = 1.0 / np.sqrt(hidden_size)
        self.w_ih = Tensor(_uniform(rng, (3 * hidden_size, input_size), bound), requires_grad=True)
        self.w_hh = Tensor(_uniform(rng, (3 * hidden_size, hidden_size), bound), requires_grad=True)
        self.b_ih = Tensor(_uniform(rng, (3 * hidden_size,), bound), requires_grad=True)
        self.b_hh = Tensor(_uniform(rng, (3 * hidden_size,), bound), requires_grad=True)
        if bidirectional:
            self.w_ih_rev = Tensor(_uniform(rng, (3 * hidden_size, input_size), bound), requires_grad=True)
            self.w_hh_rev = Tensor(_uniform(rng, (3 * hidden_size, hidden_size), bound), requires_grad=True)
            self.b_ih_rev = Tensor(_uniform(rng, (3 * hidden_size,), bound), requires_grad=True)
            self.b_hh_rev = Tensor(_uniform(rng, (3 * hidden_size,), bound), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        fwd = F.gru_scan(x, self.w_ih, self.w_hh, self.b_ih, self.b_hh)
        if not self.bidirectional:
            return fwd
        rev = F.gru_scan(F.flip(x, axis=0), self.w_ih_rev, self.w_hh_rev, self.b_ih_rev, self.b_hh_rev)
        return F.concat([fwd, F.flip(rev, axis=0)], axis=2)

    def scan_np(self, x: np.ndarray) -> np.ndarray:
        t_len, bsz = x.shape[0], x.shape[1]
        h = np.zeros((bsz, self.hidden_size), dtype=np.float32)
        ys = np.empty((t_len, bsz, self.hidden_size), dtype=np.float32)
        for t in range(t_len):
            h = F.gru_step_np(x[t], h, self.w_ih.data, self.w_hh.data, self.b_ih.data, self.b_hh.data)
            ys[t] = h
        if not self.bidirectional:
            return ys
        hr = np.zeros((bsz, self.hidden_size), dtype=np.float32)
        ys_rev = np.empty_like(ys)
        for t in range(t_len - 1, -1, -1):
            hr = F.gru_step_np(x[t], hr, self.w_ih_rev.data, self.w_hh_rev.data, self.b_ih_rev.data, self.b_hh_rev.data)
            ys_rev[t] = hr
        return np.concatenate([ys, ys_rev], axis=2)

    def make_state(self, batch: int):
        if self.bidirectional:
            raise NotImplementedError("bidirectional GRU has no streaming state")
        return {"h": np.zeros((batch, self.hidden_size), dtype=np.float32)}

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        h = F.gru_step_np(x, state["h"], self.w_ih.data, self.w_hh.data, self.b_ih.data, self.b_hh.data)
        state["h"] = h
        return h


class MultiHeadAttention(Module):
    """Self-attention over [B, N, D] with linear q/k/v/out projections.

    causal=True masks future positions along N (used when N is time);
    window bounds the causal lookback. The frequency-axis use leaves the
    attention unmasked, since frames have no ordering constraint there.
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator, causal: bool = False, window: int | None = None):
        super().__init__()
        self.dim = dim
        self.heads = heads
        self.causal = causal
        self.window = window
        self.q = Linear(dim, dim, rng)
        self.k = Linear(dim, dim, rng)
        self.v = Linear(dim, dim, rng)
        self.out = Linear(dim, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        y = F.attention(self.q(x), self.k(x), self.v(x), self.heads, causal=self.causal, window=self.window)
        return self.out(y)

    def step_np(self, x: np.ndarray) -> np.ndarray:
        """Full attention over one frame's tokens (no cross-frame state)."""
        if self.causal:
            raise NotImplementedError("time-causal attention has no per-frame streaming path")
        q = self.q.step_np(x)
        k = self.k.step_np(x)
        v = self.v.step_np(x)
        n, d = x.shape
        dh = d // self.heads
        qh = q.reshape(n, self.heads, dh).transpose(1, 0, 2)
        kh = k.reshape(n, self.heads, dh).transpose(1, 0, 2)
        vh = v.reshape(n, self.heads, dh).transpose(1, 0, 2)
        scores = qh @ kh.transpose(0, 2, 1) / np.sqrt(dh)
        scores -= scores.max(axis=-1, keepdims=True)
        e = np.exp(scores)
        probs = e / e.sum(axis=-1, keepdims=True)
        mixed = (probs @ vh).transpose(1, 0, 2).reshape(n, d)
        return self.out.step_np(mixed)
