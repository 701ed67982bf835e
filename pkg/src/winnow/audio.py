"""Mono 16 kHz WAV reading and writing.

Hand-rolled RIFF parsing so malformed files fail with the byte offset
of the problem. Accepts PCM16 and IEEE float32, exactly one channel,
exactly 16000 Hz; anything else is an explicit error, never a silent
conversion.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import SampleRateError, WavFormatError

SAMPLE_RATE = 16000

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3
_FMT_EXTENSIBLE = 0xFFFE


def read_wav(path) -> np.ndarray:
    """Read a mono 16 kHz WAV file into float32 samples in [-1, 1].

    PCM16 samples are scaled by 1/32768; float32 samples pass through.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 12:
        raise WavFormatError("file shorter than a RIFF header", offset=0)
    if buf[0:4] != b"RIFF":
        raise WavFormatError(f"expected RIFF tag, found {buf[0:4]!r}", offset=0)
    if buf[8:12] != b"WAVE":
        raise WavFormatError(f"expected WAVE form type, found {buf[8:12]!r}", offset=8)

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(buf):
        chunk_id = buf[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", buf, pos + 4)
        body = buf[pos + 8 : pos + 8 + chunk_size]
        if len(body) < chunk_size:
            raise WavFormatError(f"chunk {chunk_id!r} declares {chunk_size} bytes but file ends early", offset=pos + 8)
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise WavFormatError("fmt chunk shorter than 16 bytes", offset=pos + 8)
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            data = (body, pos + 8)
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError("missing fmt chunk", offset=pos)
    if data is None:
        raise WavFormatError("missing data chunk", offset=pos)

    format_tag, channels, rate, _byte_rate, _block_align, bits = fmt
    if format_tag == _FMT_EXTENSIBLE:
        raise WavFormatError("WAVE_FORMAT_EXTENSIBLE is not supported")
    if format_tag not in (_FMT_PCM, _FMT_IEEE_FLOAT):
        raise WavFormatError(f"unsupported format tag {format_tag}; only PCM16 and IEEE float32")
    if channels != 1:
        raise WavFormatError(f"expected mono audio, found {channels} channels")
    if rate != SAMPLE_RATE:
        raise SampleRateError(f"sample rate {rate} Hz, need {SAMPLE_RATE} Hz; resample not supported")

    body, body_offset = data
    if format_tag == _FMT_PCM:
        if bits != 16:
            raise WavFormatError(f"PCM bit depth {bits} unsupported; only 16")
        if len(body) % 2:
            raise WavFormatError("PCM16 data chunk has odd byte length", offset=body_offset)
        samples = np.frombuffer(body, dtype="<i2").astype(np.float32) / 32768.0
    else:
        if bits != 32:
            raise WavFormatError(f"float bit depth {bits} unsupported; only 32")
        if len(body) % 4:
            raise WavFormatError("float32 data chunk length not a multiple of 4", offset=body_offset)
        samples = np.frombuffer(body, dtype="<f4").astype(np.float32)
    return samples


def write_wav(path, samples: np.ndarray) -> None:
    """Write float samples as mono 16 kHz PCM16, clamping to [-1, 1]."""
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    clamped = np.clip(samples, -1.0, 1.0)
    pcm = np.clip(np.rint(clamped * 32768.0), -32768, 32767).astype("<i2")
    data = pcm.tobytes()
    byte_rate = SAMPLE_RATE * 2
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, _FMT_PCM, 1, SAMPLE_RATE, byte_rate, 2, 16)
    header += b"data" + struct.pack("<I", len(data))
    with open(path, "wb") as fh:
        fh.write(header + data)
