"""Fine refinement stage: single-scale dilated conv stack around dual-path blocks.

Consumes the low-frequency halves of the noisy spectrogram and the
coarse estimate, stacked to [4, Q, T]. A 1x1 conv lifts to C feature
maps; three residual dilated causal conv blocks widen the temporal
context; two dual-path blocks apply unmasked multi-head attention along
frequency and causal recurrence along time; the dilated stack then runs
in reverse order and a linear 1x1 conv emits a residual complex mask
over the Q low bins. Frequency resolution is preserved throughout.
"""
from __future__ import annotations

import numpy as np

from .autograd import functional as F
from .autograd.nn import (
    Conv2dCausal,
    GRU,
    LayerNorm,
    Linear,
    Module,
    ModuleList,
    MultiHeadAttention,
    PReLU,
)
from .autograd.tensor import Tensor
from .config import FineConfig


class DilatedConvBlock(Module):
    """Residual causal conv with fixed frequency resolution."""

    def __init__(self, channels: int, kernel, time_dilation: int, rng):
        super().__init__()
        kf, _ = kernel
        self.conv = Conv2dCausal(
            channels, channels, kernel, rng, stride=(1, 1), freq_pad=(kf - 1) // 2, time_dilation=time_dilation
        )
        self.norm = LayerNorm(channels, axis=0)
        self.act = PReLU(channels, channel_axis=0)

    def forward(self, x: Tensor) -> Tensor:
        return F.add(x, self.act(self.norm(self.conv(x))))

    def make_state(self):
        return self.conv.make_state()

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        return x + self.act.step_np(self.norm.step_np(self.conv.step(x, state)))


class AttentionDualPathBlock(Module):
    """Frequency attention + frequency recurrence, then time-causal recurrence.

    Layout is [C, F, T]. The intra half runs unmasked multi-head
    attention across frequency (post-norm residual) followed by a
    bidirectional GRU/ReLU/linear feed-forward; the inter half runs a
    unidirectional GRU/ReLU/linear along time. Every sublayer is
    residual with layer norm over channels.
    """

    def __init__(self, channels: int, heads: int, rng):
        super().__init__()
        self.channels = channels
        self.attn = MultiHeadAttention(channels, heads, rng, causal=False)
        self.attn_norm = LayerNorm(channels, axis=-1)
        self.ffn_gru = GRU(channels, channels // 2, rng, bidirectional=True)
        self.ffn_lin = Linear(channels, channels, rng)
        self.ffn_norm = LayerNorm(channels, axis=-1)
        self.inter_gru = GRU(channels, channels, rng)
        self.inter_lin = Linear(channels, channels, rng)
        self.inter_norm = LayerNorm(channels, axis=-1)

    def forward(self, x: Tensor) -> Tensor:
        xt = F.transpose(x, (2, 1, 0))  # [T, F, C]; frames are the batch
        x1 = self.attn_norm(F.add(xt, self.attn(xt)))
        xf = F.transpose(x1, (1, 0, 2))  # [F, T, C]; frequency is the sequence
        h = self.ffn_lin(F.relu(self.ffn_gru(xf)))
        x2 = self.ffn_norm(F.add(xf, h))
        xi = F.transpose(x2, (1, 0, 2))  # [T, F, C]; time is the sequence
        z = self.inter_lin(F.relu(self.inter_gru(xi)))
        x3 = self.inter_norm(F.add(xi, z))
        return F.transpose(x3, (2, 1, 0))  # [C, F, T]

    def make_state(self, freq: int):
        return {"inter": self.inter_gru.make_state(freq)}

    def step(self, x: np.ndarray, state: dict) -> np.ndarray:
        # x: [C, F] for one frame.
        xt = np.ascontiguousarray(x.T)  # [F, C]
        x1 = self.attn_norm.step_np(xt + self.attn.step_np(xt))
        xf = x1[:, None, :]  # [F, 1, C]
        h = self.ffn_lin.step_np(np.maximum(self.ffn_gru.scan_np(xf), 0.0))
        x2 = self.ffn_norm.step_np(xf + h)[:, 0, :]  # [F, C]
        z = self.inter_lin.step_np(np.maximum(self.inter_gru.step(x2, state["inter"]), 0.0))
        x3 = self.inter_norm.step_np(x2 + z)
        return np.ascontiguousarray(x3.T)  # [C, F]


class FineNet(Module):
    """Residual complex-mask estimator for the low-frequency bins."""

    def __init__(self, cfg: FineConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        c = cfg.feature_maps
        self.in_conv = Conv2dCausal(cfg.in_channels, c, (1, 1), rng)
        self.in_norm = LayerNorm(c, axis=0)
        self.in_act = PReLU(c, channel_axis=0)
        self.enc_blocks = ModuleList([DilatedConvBlock(c, cfg.kernel, d, rng) for d in cfg.codec_dilations])
        self.dp = ModuleList([AttentionDualPathBlock(c, cfg.attention_heads, rng) for _ in range(cfg.dp_blocks)])
        self.dec_blocks = ModuleList(
            [DilatedConvBlock(c, cfg.kernel, d, rng) for d in reversed(cfg.codec_dilations)]
        )
        self.out_conv = Conv2dCausal(c, 2, (1, 1), rng)

    def forward(self, x_low: Tensor, s_coarse_low: Tensor) -> Tensor:
        """[2, Q, T] noisy low band + [2, Q, T] coarse estimate -> [2, Q, T] mask."""
        h = F.concat([x_low, s_coarse_low], axis=0)
        h = self.in_act(self.in_norm(self.in_conv(h)))
        for block in self.enc_blocks:
            h = block(h)
        for block in self.dp:
            h = block(h)
        for block in self.dec_blocks:
            h = block(h)
        return self.out_conv(h)

    def make_state(self):
        q = self.cfg.low_bins
        return {
            "in": self.in_conv.make_state(),
            "enc": [b.make_state() for b in self.enc_blocks],
            "dp": [b.make_state(q) for b in self.dp],
            "dec": [b.make_state() for b in self.dec_blocks],
            "out": self.out_conv.make_state(),
        }

    def step(self, x_low: np.ndarray, s_coarse_low: np.ndarray, state: dict) -> np.ndarray:
        h = np.concatenate([x_low, s_coarse_low], axis=0)
        h = self.in_act.step_np(self.in_norm.step_np(self.in_conv.step(h, state["in"])))
        for block, st in zip(self.enc_blocks, state["enc"]):
            h = block.step(h, st)
        for block, st in zip(self.dp, state["dp"]):
            h = block.step(h, st)
        for block, st in zip(self.dec_blocks, state["dec"]):
            h = block.step(h, st)
        return self.out_conv.step(h, state["out"])

    def profile_items(self) -> list:
        """(name, parameter count, multiply-accumulates per frame) per layer."""
        items = []
        c = self.cfg.feature_maps
        q = self.cfg.low_bins
        kf, kt = self.cfg.kernel
        in_params = (
            self.in_conv.num_parameters() + self.in_norm.num_parameters() + self.in_act.num_parameters()
        )
        items.append(("in_conv", in_params, self.cfg.in_channels * c * q))
        for i, block in enumerate(self.enc_blocks):
            items.append((f"enc_blocks.{i}", block.num_parameters(), c * c * kf * kt * q))
        half = c // 2
        for i, block in enumerate(self.dp):
            macs = (
                4 * q * c * c + 2 * q * q * c  # attention projections + score/mix
                + q * 2 * 3 * half * (c + half)  # bidirectional feed-forward recurrence
                + q * c * c  # feed-forward projection
                + q * 3 * c * (c + c)  # causal inter recurrence
                + q * c * c  # inter projection
            )
            items.append((f"dp.{i}", block.num_parameters(), macs))
        for i, block in enumerate(self.dec_blocks):
            items.append((f"dec_blocks.{i}", block.num_parameters(), c * c * kf * kt * q))
        items.append(("out_conv", self.out_conv.num_parameters(), c * 2 * q))
        return items
