"""Coarse enhancement stage: U-shaped encoder/decoder around dual-path recurrence.

Operates on the band-merged spectrogram [2, P, T]. Three causal conv
blocks halve the frequency axis twice, two dual-path blocks model the
bottleneck (a bidirectional LSTM along frequency, a unidirectional LSTM
along time), and three transposed-conv blocks mirror the encoder with
skip concatenation. A final 1x1 linear conv emits a complex mask over
the P bands.

Every layer has a frame-by-frame ``step`` path used by the streaming
pipeline; the only state is the conv time history and the inter-frame
LSTM carry, so streaming matches the offline forward exactly.
"""
from __future__ import annotations

import numpy as np

from .autograd import functional as F
from .autograd.nn import (
    Conv2dCausal,
    ConvTranspose2dCausal,
    LayerNorm,
    Linear,
    LSTM,
    Module,
    ModuleList,
    PReLU,
)
from .autograd.tensor import Tensor
from .config import CoarseConfig


class EncoderBlock(Module):
    def __init__(self, in_ch: int, out_ch: int, kernel, stride, freq_pad: int, rng):
        super().__init__()
        self.conv = Conv2dCausal(in_ch, out_ch, kernel, rng, stride=stride, freq_pad=freq_pad)
        self.norm = LayerNorm(out_ch, axis=0)
        self.act = PReLU(out_ch, channel_axis=0)

    def forward(self, x: Tensor) -> Tensor:
        return self.act(self.norm(self.conv(x)))

    def make_state(self):
        return self.conv.make_state()

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        return self.act.step_np(self.norm.step_np(self.conv.step(x, state)))


class DecoderBlock(Module):
    def __init__(self, in_ch: int, out_ch: int, kernel, freq_stride: int, freq_pad: int, freq_out_pad: int, rng):
        super().__init__()
        self.deconv = ConvTranspose2dCausal(
            in_ch, out_ch, kernel, rng, freq_stride=freq_stride, freq_pad=freq_pad, freq_out_pad=freq_out_pad
        )
        self.norm = LayerNorm(out_ch, axis=0)
        self.act = PReLU(out_ch, channel_axis=0)

    def forward(self, x: Tensor) -> Tensor:
        return self.act(self.norm(self.deconv(x)))

    def make_state(self):
        return self.deconv.make_state()

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        return self.act.step_np(self.norm.step_np(self.deconv.step(x, state)))


class DualPathBlock(Module):
    """Frequency-bidirectional then time-causal recurrence with residuals.

    Input/output layout is [C, F, T]. The intra pass treats frequency as
    the sequence (batched over frames), the inter pass treats time as
    the sequence (batched over frequencies); each is followed by a
    linear projection, layer norm over channels, and a residual add.
    """

    def __init__(self, channels: int, hidden: int, rng):
        super().__init__()
        self.channels = channels
        self.hidden = hidden
        self.intra = LSTM(channels, hidden // 2, rng, bidirectional=True)
        self.intra_proj = Linear(hidden, channels, rng)
        self.intra_norm = LayerNorm(channels, axis=-1)
        self.inter = LSTM(channels, hidden, rng)
        self.inter_proj = Linear(hidden, channels, rng)
        self.inter_norm = LayerNorm(channels, axis=-1)

    def forward(self, x: Tensor) -> Tensor:
        xt = F.transpose(x, (1, 2, 0))  # [F, T, C]
        y = self.intra_norm(self.intra_proj(self.intra(xt)))
        x1 = F.add(xt, y)
        xi = F.transpose(x1, (1, 0, 2))  # [T, F, C]
        z = self.inter_norm(self.inter_proj(self.inter(xi)))
        x2 = F.add(xi, z)
        return F.transpose(x2, (2, 1, 0))  # [C, F, T]

    def make_state(self, freq: int):
        return {"inter": self.inter.make_state(freq)}

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        # x: [C, F] for one frame.
        xt = np.ascontiguousarray(x.T)[:, None, :]  # [F, 1, C]
        y = self.intra_norm.step_np(self.intra_proj.step_np(self.intra.scan_np(xt)))
        x1 = (xt + y)[:, 0, :]  # [F, C]
        h = self.inter.step(x1, state["inter"])
        z = self.inter_norm.step_np(self.inter_proj.step_np(h))
        return np.ascontiguousarray((x1 + z).T)  # [C, F]


class CoarseNet(Module):
    """Band-domain complex mask estimator."""

    def __init__(self, cfg: CoarseConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        chans = cfg.enc_channels
        self.freq_sizes = cfg.freq_sizes()  # input size plus size after each encoder block
        enc = []
        in_ch = 2
        for i in range(len(chans)):
            enc.append(EncoderBlock(in_ch, chans[i], cfg.kernels[i], cfg.strides[i], cfg.freq_pads[i], rng))
            in_ch = chans[i]
        self.enc = ModuleList(enc)

        self.dp = ModuleList([DualPathBlock(chans[-1], cfg.dp_hidden, rng) for _ in range(cfg.dp_blocks)])

        dec = []
        for i in range(len(chans) - 1, -1, -1):
            kf = cfg.kernels[i][0]
            s = cfg.strides[i][0]
            p = cfg.freq_pads[i]
            f_in, target = self.freq_sizes[i + 1], self.freq_sizes[i]
            opad = target - ((f_in - 1) * s - 2 * p + kf)
            if opad < 0 or opad >= s:
                raise ValueError(f"decoder stage {i}: cannot mirror {f_in}->{target} with k={kf} s={s} p={p}")
            out_ch = chans[i - 1] if i > 0 else chans[0]
            dec.append(
                DecoderBlock(2 * chans[i], out_ch, cfg.kernels[i], s, p, opad, rng)
            )
        self.dec = ModuleList(dec)
        self.out_conv = Conv2dCausal(chans[0], 2, (1, 1), rng)

    def forward(self, x: Tensor) -> Tensor:
        """[2, P, T] band spectrogram -> [2, P, T] complex band mask."""
        skips = []
        h = x
        for block in self.enc:
            h = block(h)
            skips.append(h)
        for block in self.dp:
            h = block(h)
        for i, block in enumerate(self.dec):
            h = block(F.concat([h, skips[len(skips) - 1 - i]], axis=0))
        return self.out_conv(h)

    def make_state(self):
        f_bottom = self.freq_sizes[-1]
        return {
            "enc": [b.make_state() for b in self.enc],
            "dp": [b.make_state(f_bottom) for b in self.dp],
            "dec": [b.make_state() for b in self.dec],
            "out": self.out_conv.make_state(),
        }

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        skips = []
        h = x
        for block, st in zip(self.enc, state["enc"]):
            h = block.step(h, st)
            skips.append(h)
        for block, st in zip(self.dp, state["dp"]):
            h = block.step(h, st)
        for i, (block, st) in enumerate(zip(self.dec, state["dec"])):
            h = block.step(np.concatenate([h, skips[len(skips) - 1 - i]], axis=0), st)
        return self.out_conv.step(h, state["out"])

    def profile_items(self) -> list:
        """(name, parameter count, multiply-accumulates per frame) per layer."""
        items = []
        chans = self.cfg.enc_channels
        f = self.freq_sizes
        in_ch = 2
        for i, block in enumerate(self.enc):
            kf, kt = self.cfg.kernels[i]
            macs = chans[i] * in_ch * kf * kt * f[i + 1]
            items.append((f"enc.{i}", block.num_parameters(), macs))
            in_ch = chans[i]
        fb = f[-1]
        c = chans[-1]
        hid = self.cfg.dp_hidden
        for i, block in enumerate(self.dp):
            half = hid // 2
            macs = (
                fb * 2 * 4 * half * (c + half)  # bidirectional intra recurrence
                + fb * hid * c  # intra projection
                + fb * 4 * hid * (c + hid)  # causal inter recurrence
                + fb * hid * c  # inter projection
            )
            items.append((f"dp.{i}", block.num_parameters(), macs))
        for j, block in enumerate(self.dec):
            i = len(chans) - 1 - j
            kf, kt = self.cfg.kernels[i]
            out_ch = chans[i - 1] if i > 0 else chans[0]
            macs = (2 * chans[i]) * out_ch * kf * kt * f[i + 1]
            items.append((f"dec.{j}", block.num_parameters(), macs))
        items.append(("out_conv", self.out_conv.num_parameters(), chans[0] * 2 * f[0]))
        return items
