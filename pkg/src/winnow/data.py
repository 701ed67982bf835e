"""Synthetic training mixtures: harmonic tone complexes in shaped noise.

The clean signal is a sum of 2-5 tone events, each a harmonic stack
with a random fundamental, onset, duration, and a raised-cosine
envelope. The noise is white Gaussian, optionally band-shaped with a
short FIR and amplitude-modulated at a slow rate. The noise is scaled
so the mixture hits a requested SNR exactly, and both signals share any
final peak normalization so the SNR survives it.

Everything is driven by ``numpy.random.Generator`` seeded from
``(seed, index)``, so a batch is reproducible element by element.
"""
from __future__ import annotations

import numpy as np

from .audio import SAMPLE_RATE

_MAX_TONE_HZ = 7200.0


def _raised_cosine_envelope(n: int, attack: int, release: int) -> np.ndarray:
    env = np.ones(n, dtype=np.float64)
    attack = min(attack, n // 2)
    release = min(release, n - attack)
    if attack > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(attack) / attack)
        env[:attack] = ramp
    if release > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(release) / release)
        env[n - release :] = ramp[::-1]
    return env


def _tone_event(rng: np.random.Generator, total: int) -> np.ndarray:
    out = np.zeros(total, dtype=np.float64)
    f0 = rng.uniform(80.0, 400.0)
    onset = int(rng.uniform(0.0, 0.5) * total)
    length = int(rng.uniform(0.35, 1.0) * (total - onset))
    length = max(length, SAMPLE_RATE // 4)
    length = min(length, total - onset)
    t = np.arange(length) / SAMPLE_RATE
    seg = np.zeros(length, dtype=np.float64)
    n_harm = int(rng.integers(1, 6))
    for h in range(1, n_harm + 1):
        freq = f0 * h
        if freq >= _MAX_TONE_HZ:
            break
        amp = rng.uniform(0.3, 1.0) / h
        phase = rng.uniform(0.0, 2.0 * np.pi)
        seg += amp * np.sin(2.0 * np.pi * freq * t + phase)
    fade = max(int(0.01 * SAMPLE_RATE), 16)
    seg *= _raised_cosine_envelope(length, fade, fade)
    out[onset : onset + length] = seg
    return out


def _shaped_noise(rng: np.random.Generator, total: int) -> np.ndarray:
    noise = rng.standard_normal(total)
    if rng.random() < 0.7:
        # Band-shape with a short windowed-cosine FIR.
        taps = int(rng.integers(8, 33))
        center = rng.uniform(0.0, 0.8)  # normalized center frequency
        n = np.arange(taps)
        kernel = np.hanning(taps) * np.cos(np.pi * center * (n - (taps - 1) / 2.0))
        kernel /= np.sqrt(np.sum(kernel**2)) + 1e-12
        noise = np.convolve(noise, kernel, mode="same")
    if rng.random() < 0.5:
        rate = rng.uniform(0.5, 4.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        t = np.arange(total) / SAMPLE_RATE
        noise *= 1.0 + 0.5 * np.sin(2.0 * np.pi * rate * t + phase)
    return noise


def synthesize_pair(
    rng: np.random.Generator,
    duration_s: float = 4.0,
    snr_low_db: float = -5.0,
    snr_high_db: float = 20.0,
    snr_db: float | None = None,
) -> tuple:
    """One (mixture, clean) pair of float32 waveforms at 16 kHz.

    The noise level is set so mean(clean^2) / mean(noise^2) equals the
    requested SNR exactly; a shared peak normalization keeps it intact.
    """
    total = int(round(duration_s * SAMPLE_RATE))
    clean = np.zeros(total, dtype=np.float64)
    for _ in range(int(rng.integers(2, 6))):
        clean += _tone_event(rng, total)
    clean *= 0.08 / (np.sqrt(np.mean(clean**2)) + 1e-12)

    noise = _shaped_noise(rng, total)
    if snr_db is None:
        snr_db = float(rng.uniform(snr_low_db, snr_high_db))
    p_clean = float(np.mean(clean**2))
    p_noise = float(np.mean(noise**2))
    noise *= np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))

    mixture = clean + noise
    peak = float(np.max(np.abs(mixture)))
    if peak > 0.99:
        scale = 0.99 / peak
        mixture *= scale
        clean *= scale
    return mixture.astype(np.float32), clean.astype(np.float32)


def synthesize_batch(
    seed: int,
    count: int,
    duration_s: float = 4.0,
    snr_low_db: float = -5.0,
    snr_high_db: float = 20.0,
) -> list:
    """Deterministic list of (mixture, clean) pairs for a seed."""
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed & 0xFFFFFFFF, i])
        out.append(synthesize_pair(rng, duration_s, snr_low_db, snr_high_db))
    return out
