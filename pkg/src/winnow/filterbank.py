"""Learnable complex filter bank: band merging and band splitting.

Merging compresses a [2, F, T] spectrogram into [2, P, T] by taking a
complex inner product of each group of G = F/P adjacent bins against
per-band complex weights; splitting expands a [2, P, T] mask back to
[2, F, T] with per-band 1-to-G complex projections. Both are
block-diagonal (band p touches only band p's bins), realized as
grouped 1x1 convolutions applied four ways for the complex arithmetic.

Initialization makes the untrained bank a rectangular averaging bank:
merge weights 1/G + 0i, split weights 1 + 0i, so merge-then-split is
exactly a per-band mean broadcast until training moves the weights.
"""
from __future__ import annotations

import numpy as np

from .autograd import functional as F
from .autograd.nn import Module
from .autograd.tensor import Tensor
from .config import LcrbConfig


class ComplexBandProjection(Module):
    """Block-diagonal complex projection between [2, C_in, T] and [2, C_out, T].

    out_r = W_r x_r - W_i x_i;  out_i = W_r x_i + W_i x_r
    """

    def __init__(self, in_channels: int, out_channels: int, groups: int, init_real: float):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.groups = groups
        shape = (out_channels, in_channels // groups, 1)
        self.real = Tensor(np.full(shape, init_real, dtype=np.float32), requires_grad=True)
        self.imag = Tensor(np.zeros(shape, dtype=np.float32), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        xr, xi = F.getitem(x, 0), F.getitem(x, 1)
        wr_xr = F.grouped_conv1d(xr, self.real, None, self.groups)
        wr_xi = F.grouped_conv1d(xi, self.real, None, self.groups)
        wi_xr = F.grouped_conv1d(xr, self.imag, None, self.groups)
        wi_xi = F.grouped_conv1d(xi, self.imag, None, self.groups)
        out_r = F.add(wr_xr, F.mul(wi_xi, -1.0))
        out_i = F.add(wr_xi, wi_xr)
        t = x.data.shape[2]
        return F.concat(
            [F.reshape(out_r, (1, self.out_channels, t)), F.reshape(out_i, (1, self.out_channels, t))], axis=0
        )

    def step_np(self, x: np.ndarray) -> np.ndarray:
        """One frame [2, C_in] -> [2, C_out] on plain arrays."""
        g = self.groups
        wr = self.real.data[:, :, 0].reshape(g, self.out_channels // g, -1)
        wi = self.imag.data[:, :, 0].reshape(g, self.out_channels // g, -1)
        xr = x[0].reshape(g, -1, 1)
        xi = x[1].reshape(g, -1, 1)
        out_r = (wr @ xr - wi @ xi).reshape(self.out_channels)
        out_i = (wr @ xi + wi @ xr).reshape(self.out_channels)
        return np.stack([out_r, out_i])

    def macs_per_frame(self) -> int:
        # four real grouped projections per complex multiply
        return 4 * self.out_channels * (self.in_channels // self.groups)


class LcrbFilterBank(Module):
    """Band merge (F bins -> P bands) and band split (P bands -> F bins)."""

    def __init__(self, cfg: LcrbConfig):
        super().__init__()
        self.cfg = cfg
        g = cfg.bins_per_band
        self.merge = ComplexBandProjection(cfg.bins, cfg.bands, groups=cfg.bands, init_real=1.0 / g)
        self.split = ComplexBandProjection(cfg.bands, cfg.bins, groups=cfg.bands, init_real=1.0)

    def band_merge(self, x: Tensor) -> Tensor:
        if x.data.shape[0] != 2 or x.data.shape[1] != self.cfg.bins:
            raise ValueError(f"band_merge expects [2, {self.cfg.bins}, T], got {x.data.shape}")
        return self.merge(x)

    def band_split(self, m: Tensor) -> Tensor:
        if m.data.shape[0] != 2 or m.data.shape[1] != self.cfg.bands:
            raise ValueError(f"band_split expects [2, {self.cfg.bands}, T], got {m.data.shape}")
        return self.split(m)
