"""STFT analysis and overlap-add synthesis, offline and streaming.

Framing: 512-sample periodic Hann window, 256-sample hop, 512-point
FFT, DC bin dropped (bins 1..256 kept, Nyquist included). Analysis
frame t covers samples [t*hop - hop, t*hop + hop): the grid starts one
hop before the signal, with zeros filling the gap. The shift keeps
T = ceil(len/hop) and causality while making every sample before the
final hop two-frame covered, so normalized overlap-add reconstructs it
exactly (a grid starting at sample 0 would lose sample 0 outright,
since the periodic Hann is zero there).

Synthesis applies the same window again and divides by the accumulated
squared window. Overlap-add runs in float64; one hop of output only
becomes final after the next frame arrives, which is the pipeline's one
window (512 sample) algorithmic latency.
"""
from __future__ import annotations

import numpy as np

from .autograd import functional as AF
from .autograd.tensor import Tensor

SAMPLE_RATE = 16000
WIN = 512
HOP = 256
N_BINS = 256  # fft_size/2: DC dropped, Nyquist kept

# periodic Hann: w[n] = 0.5 - 0.5 cos(2 pi n / WIN)
_WINDOW = (0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(WIN) / WIN)).astype(np.float64)
# Per-hop overlap-add normalizer: previous frame's second half plus
# current frame's first half cover each emitted hop.
_OLA_NORM = _WINDOW[HOP:] ** 2 + _WINDOW[:HOP] ** 2


def frame_count(num_samples: int) -> int:
    return -(-num_samples // HOP)  # ceil


def stft(samples: np.ndarray) -> np.ndarray:
    """Analyze a waveform into a [2, 256, T] real/imag spectrogram.

    Requires at least one full window of input. T = ceil(len / 256).
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    n = samples.size
    if n < WIN:
        raise ValueError(f"stft needs at least {WIN} samples, got {n}")
    t_frames = frame_count(n)
    padded = np.zeros(t_frames * HOP + HOP, dtype=np.float64)
    padded[HOP : HOP + n] = samples
    idx = np.arange(WIN)[None, :] + HOP * np.arange(t_frames)[:, None]
    frames = padded[idx] * _WINDOW
    spec = np.fft.rfft(frames, n=WIN, axis=1)[:, 1:]  # drop DC
    out = np.empty((2, N_BINS, t_frames), dtype=np.float32)
    out[0] = spec.real.T
    out[1] = spec.imag.T
    return out


def istft(spec: np.ndarray, out_len: int) -> np.ndarray:
    """Overlap-add synthesis back to out_len samples.

    Inverts stft's framing, including the one-hop grid shift. out_len
    may not exceed T * 256 (the sample span the frames cover).
    """
    spec = np.asarray(getattr(spec, "data", spec))
    if spec.ndim != 3 or spec.shape[0] != 2 or spec.shape[1] != N_BINS:
        raise ValueError(f"expected a [2, {N_BINS}, T] spectrogram, got shape {spec.shape}")
    t_frames = spec.shape[2]
    if out_len > t_frames * HOP:
        raise ValueError(f"out_len {out_len} exceeds the {t_frames * HOP} samples spanned by {t_frames} frames")
    z = spec[0].astype(np.float64) + 1j * spec[1].astype(np.float64)
    full = np.concatenate([np.zeros((1, t_frames)), z], axis=0)  # DC back as 0
    frames = np.fft.irfft(full.T, n=WIN, axis=1) * _WINDOW
    total = t_frames * HOP + HOP
    acc = np.zeros(total, dtype=np.float64)
    wsq = np.zeros(total, dtype=np.float64)
    for t in range(t_frames):
        acc[t * HOP : t * HOP + WIN] += frames[t]
        wsq[t * HOP : t * HOP + WIN] += _WINDOW * _WINDOW
    out = np.where(wsq > 1e-30, acc / np.maximum(wsq, 1e-30), 0.0)
    return out[HOP : HOP + out_len].astype(np.float32)


def apply_complex_mask(x: Tensor, m: Tensor) -> Tensor:
    """Elementwise complex multiply of two [2, F, T] tensors."""
    if x.data.shape != m.data.shape:
        raise ValueError(f"mask shape {m.data.shape} does not match spectrogram {x.data.shape}")
    xr, xi = AF.getitem(x, 0), AF.getitem(x, 1)
    mr, mi = AF.getitem(m, 0), AF.getitem(m, 1)
    real = AF.add(AF.mul(xr, mr), AF.mul(AF.mul(xi, mi), -1.0))
    imag = AF.add(AF.mul(xr, mi), AF.mul(xi, mr))
    f, t = x.data.shape[1], x.data.shape[2]
    return AF.concat([AF.reshape(real, (1, f, t)), AF.reshape(imag, (1, f, t))], axis=0)


def apply_complex_mask_np(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Plain-array twin of apply_complex_mask for the streaming path."""
    out = np.empty_like(x)
    out[0] = x[0] * m[0] - x[1] * m[1]
    out[1] = x[0] * m[1] + x[1] * m[0]
    return out


class StreamingStft:
    """Produces one analysis frame per pushed hop of 256 input samples."""

    def __init__(self):
        self._prev = np.zeros(HOP, dtype=np.float64)

    def push(self, hop_samples: np.ndarray) -> np.ndarray:
        """Returns the [2, 256] spectrum of the frame ending at this hop."""
        hop_samples = np.asarray(hop_samples, dtype=np.float64).reshape(-1)
        if hop_samples.size != HOP:
            raise ValueError(f"push expects exactly {HOP} samples, got {hop_samples.size}")
        frame = np.concatenate([self._prev, hop_samples]) * _WINDOW
        self._prev = hop_samples
        spec = np.fft.rfft(frame, n=WIN)[1:]
        return np.stack([spec.real, spec.imag]).astype(np.float32)


class StreamingIstft:
    """Rebuilds one output hop per pushed spectrum frame.

    The first returned hop is warm-up (it synthesizes the analysis
    grid's synthetic lead-in, not signal) and is dropped by callers that
    align against offline output.
    """

    def __init__(self):
        self._carry = np.zeros(HOP, dtype=np.float64)

    def push(self, frame_spec: np.ndarray) -> np.ndarray:
        z = frame_spec[0].astype(np.float64) + 1j * frame_spec[1].astype(np.float64)
        frame = np.fft.irfft(np.concatenate([[0.0], z]), n=WIN) * _WINDOW
        out = (self._carry + frame[:HOP]) / _OLA_NORM
        self._carry = frame[HOP:]
        return out.astype(np.float32)
