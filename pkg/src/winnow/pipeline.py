"""Waveform-level enhancement drivers: offline batch and hop-by-hop streaming.

Both drivers pad the signal with one trailing zero hop before synthesis
so every emitted sample is covered by two analysis windows; overlap-add
then divides by a constant, well-conditioned window-power envelope
instead of amplifying the tail of the final half-covered frame. The two
paths therefore produce identical waveforms up to float accumulation
order.

Streaming contract: ``push`` accepts one 256-sample hop and returns the
256 enhanced samples of the *previous* hop (one hop of algorithmic
latency, 512 samples of total look-back with the analysis window). The
first returned hop is warm-up padding and should be discarded;
``flush`` returns the enhanced final hop.
"""
from __future__ import annotations

import numpy as np

from .autograd.tensor import Tensor
from .autograd.tensor import no_grad
from .frontend import HOP, StreamingIstft, StreamingStft, frame_count, istft, stft
from .model import TwoStageEnhancer


def enhance_offline(samples: np.ndarray, model: TwoStageEnhancer) -> np.ndarray:
    """Enhance a full waveform in one pass. Returns float32 of the same length."""
    samples = np.asarray(samples, dtype=np.float32)
    if samples.ndim != 1:
        raise ValueError(f"expected mono waveform, got shape {samples.shape}")
    if samples.size < 2 * HOP:
        raise ValueError(f"waveform must be at least {2 * HOP} samples, got {samples.size}")
    hops = frame_count(samples.size)
    padded = np.zeros((hops + 1) * HOP, dtype=np.float32)
    padded[: samples.size] = samples
    spec = stft(padded)
    with no_grad():
        s_fine, _ = model.forward(Tensor(spec))
    return istft(s_fine.data, samples.size)


class StreamingEnhancer:
    """Hop-by-hop enhancement with one hop of latency."""

    def __init__(self, model: TwoStageEnhancer):
        self._model = model
        self.reset()

    def reset(self) -> None:
        self._stft = StreamingStft()
        self._istft = StreamingIstft()
        self._state = self._model.make_stream_state()

    def push(self, hop: np.ndarray) -> np.ndarray:
        """Feed 256 input samples; get the 256 enhanced samples of the previous hop."""
        hop = np.asarray(hop, dtype=np.float32)
        if hop.shape != (HOP,):
            raise ValueError(f"push expects exactly {HOP} samples, got shape {hop.shape}")
        frame = self._stft.push(hop)
        enhanced = self._model.step_frame(frame, self._state)
        return self._istft.push(enhanced)

    def flush(self) -> np.ndarray:
        """Complete the stream; returns the enhanced final hop."""
        return self.push(np.zeros(HOP, dtype=np.float32))


def enhance_streaming(samples: np.ndarray, model: TwoStageEnhancer) -> np.ndarray:
    """Drive StreamingEnhancer over a waveform; same output as enhance_offline."""
    samples = np.asarray(samples, dtype=np.float32)
    if samples.ndim != 1:
        raise ValueError(f"expected mono waveform, got shape {samples.shape}")
    if samples.size < 2 * HOP:
        raise ValueError(f"waveform must be at least {2 * HOP} samples, got {samples.size}")
    hops = frame_count(samples.size)
    padded = np.zeros(hops * HOP, dtype=np.float32)
    padded[: samples.size] = samples
    eng = StreamingEnhancer(model)
    out = np.empty(hops * HOP, dtype=np.float32)
    for j in range(hops):
        chunk = eng.push(padded[j * HOP : (j + 1) * HOP])
        if j > 0:
            out[(j - 1) * HOP : j * HOP] = chunk
    out[(hops - 1) * HOP :] = eng.flush()
    return out[: samples.size]
