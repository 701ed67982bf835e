"""Two-stage speech enhancement model.

Stage one estimates a complex mask in a learned band domain (filter
bank + coarse net) and applies it to the full-resolution spectrogram.
Stage two re-estimates only the low-frequency bins: a fine net sees the
noisy low band and the coarse low band and emits a residual complex
mask whose masked noisy input is *added* to the coarse estimate. The
high band of the final output is the coarse high band, bit for bit.

Both stages are causal; ``step_frame`` produces the same output as
``forward`` one frame at a time given the state from
``make_stream_state``.
"""
from __future__ import annotations

import numpy as np

from .autograd import functional as F
from .autograd.nn import Module
from .autograd.tensor import Tensor
from .coarse import CoarseNet
from .config import ModelConfig
from .errors import ConfigError
from .filterbank import LcrbFilterBank
from .fine import FineNet
from .frontend import apply_complex_mask, apply_complex_mask_np


class TwoStageEnhancer(Module):
    """Full enhancement model; sections follow the supplied config."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        config.validate()
        self._config = config
        rng = np.random.default_rng(seed)
        if config.lcrb is not None:
            self.lcrb = LcrbFilterBank(config.lcrb)
        else:
            self.lcrb = None
        if config.coarse is not None:
            if config.lcrb is None:
                raise ConfigError("coarse stage requires the filter bank section")
            self.coarse = CoarseNet(config.coarse, rng)
        else:
            self.coarse = None
        if config.fine is not None:
            if config.coarse is None:
                raise ConfigError("fine stage requires the coarse section")
            self.fine = FineNet(config.fine, rng)
        else:
            self.fine = None

    @property
    def config(self) -> ModelConfig:
        return self._config

    def _require_coarse(self):
        if self.lcrb is None or self.coarse is None:
            raise ConfigError("model has no coarse stage; config omitted lcrb/coarse sections")

    def coarse_enhance(self, x: Tensor) -> tuple:
        """Noisy spectrogram [2, F, T] -> (coarse estimate [2, F, T], band mask [2, P, T])."""
        self._require_coarse()
        compact = self.lcrb.band_merge(x)
        band_mask = self.coarse(compact)
        full_mask = self.lcrb.band_split(band_mask)
        s_coarse = apply_complex_mask(x, full_mask)
        return s_coarse, band_mask

    def fine_refine(self, x: Tensor, s_coarse: Tensor) -> Tensor:
        """Refine the low band of a coarse estimate; high band passes through."""
        if self.fine is None:
            return s_coarse
        q = self.fine.cfg.low_bins
        x_low = x[:, :q]
        s_low = s_coarse[:, :q]
        mask = self.fine(x_low, s_low)
        s_fine_low = F.add(s_low, apply_complex_mask(x_low, mask))
        if q == x.data.shape[1]:
            return s_fine_low
        return F.concat([s_fine_low, s_coarse[:, q:]], axis=1)

    def forward(self, x: Tensor) -> tuple:
        """Noisy spectrogram [2, F, T] -> (fine estimate, coarse estimate)."""
        s_coarse, _ = self.coarse_enhance(x)
        s_fine = self.fine_refine(x, s_coarse)
        return s_fine, s_coarse

    # -- streaming ---------------------------------------------------------

    def make_stream_state(self) -> dict:
        self._require_coarse()
        state = {"coarse": self.coarse.make_state()}
        if self.fine is not None:
            state["fine"] = self.fine.make_state()
        return state

    def step_frame(self, x_frame: np.ndarray, state: dict) -> np.ndarray:
        """One spectrogram frame [2, F] -> enhanced frame [2, F]."""
        compact = self.lcrb.merge.step_np(x_frame)
        band_mask = self.coarse.step(compact, state["coarse"])
        full_mask = self.lcrb.split.step_np(band_mask)
        s_coarse = apply_complex_mask_np(x_frame, full_mask)
        if self.fine is None:
            return s_coarse
        q = self.fine.cfg.low_bins
        mask = self.fine.step(x_frame[:, :q], s_coarse[:, :q], state["fine"])
        s_low = s_coarse[:, :q] + apply_complex_mask_np(x_frame[:, :q], mask)
        if q == x_frame.shape[1]:
            return s_low
        return np.concatenate([s_low, s_coarse[:, q:]], axis=1)

    # -- profiling ---------------------------------------------------------

    def profile_items(self) -> list:
        """(dotted name, params, multiply-accumulates per frame) for every layer."""
        items = []
        if self.lcrb is not None:
            items.append(("lcrb.merge", self.lcrb.merge.num_parameters(), self.lcrb.merge.macs_per_frame()))
            items.append(("lcrb.split", self.lcrb.split.num_parameters(), self.lcrb.split.macs_per_frame()))
        if self.coarse is not None:
            items.extend((f"coarse.{n}", p, m) for n, p, m in self.coarse.profile_items())
        if self.fine is not None:
            items.extend((f"fine.{n}", p, m) for n, p, m in self.fine.profile_items())
        return items


def build_model(config: ModelConfig, seed: int = 0) -> TwoStageEnhancer:
    return TwoStageEnhancer(config, seed=seed)
