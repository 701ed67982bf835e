"""Binary checkpoint serialization.

Layout: magic "THLN", u32 version, u32 tensor count; per tensor a u16
name length, the UTF-8 name, u8 dtype code (0 = float32), u8 rank, u32
dims, then the little-endian float32 payload; finally u32 config-JSON
length and the JSON bytes. Round trips are bit-exact.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import CheckpointMagicError, CheckpointTruncatedError, CheckpointVersionError, ConfigError

MAGIC = b"THLN"
VERSION = 1
_DTYPE_F32 = 0


@dataclass
class Checkpoint:
    version: int
    named_tensors: dict  # name -> float32 ndarray, insertion-ordered
    config: dict  # raw config JSON object


def save_checkpoint(path, named_tensors: dict, config) -> None:
    """Write tensors and config to path; values are stored as float32."""
    if isinstance(config, ModelConfig):
        config = config.to_dict()
    parts = [MAGIC, struct.pack("<II", VERSION, len(named_tensors))]
    for name, value in named_tensors.items():
        data = np.ascontiguousarray(getattr(value, "data", value), dtype="<f4")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<BB", _DTYPE_F32, data.ndim))
        parts.append(struct.pack(f"<{data.ndim}I", *data.shape))
        parts.append(data.tobytes())
    blob = json.dumps(config).encode("utf-8")
    parts.append(struct.pack("<I", len(blob)))
    parts.append(blob)
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointTruncatedError(
                f"checkpoint truncated reading {what}: need {n} bytes at offset {self.pos}, have {len(self.buf) - self.pos}"
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what):
        return self.take(1, what)[0]

    def u16(self, what):
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        buf = fh.read()
    r = _Reader(buf)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise CheckpointMagicError(f"bad checkpoint magic {magic!r}, expected {MAGIC!r}")
    version = r.u32("version")
    if version != VERSION:
        raise CheckpointVersionError(f"checkpoint version {version} unsupported; this build reads {VERSION}")
    count = r.u32("tensor count")
    tensors: dict[str, np.ndarray] = {}
    for i in range(count):
        name_len = r.u16(f"tensor {i} name length")
        name = r.take(name_len, f"tensor {i} name").decode("utf-8")
        dtype_code = r.u8(f"tensor '{name}' dtype")
        if dtype_code != _DTYPE_F32:
            raise CheckpointVersionError(f"tensor '{name}': dtype code {dtype_code} unknown (only 0=float32)")
        rank = r.u8(f"tensor '{name}' rank")
        shape = tuple(r.u32(f"tensor '{name}' dim {d}") for d in range(rank))
        n_elem = int(np.prod(shape)) if shape else 1
        payload = r.take(4 * n_elem, f"tensor '{name}' payload")
        arr = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
        if name in tensors:
            raise ConfigError(f"checkpoint contains tensor '{name}' twice")
        tensors[name] = arr
    json_len = r.u32("config length")
    blob = r.take(json_len, "config JSON")
    try:
        config = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"checkpoint config JSON unreadable: {e}") from e
    return Checkpoint(version=version, named_tensors=tensors, config=config)


def apply_checkpoint(model, ckpt: Checkpoint) -> None:
    """Copy checkpoint tensors into the model's parameters.

    The full registry is compared first, so a mismatch in any name or
    shape fails before a single weight has been touched.
    """
    params = model.parameters()
    missing = sorted(set(params) - set(ckpt.named_tensors))
    extra = sorted(set(ckpt.named_tensors) - set(params))
    if missing or extra:
        raise ConfigError(
            "checkpoint/model registry mismatch: "
            + (f"missing {missing[:5]} " if missing else "")
            + (f"unexpected {extra[:5]}" if extra else "")
        )
    for name, p in params.items():
        arr = ckpt.named_tensors[name]
        if arr.shape != p.data.shape:
            raise ConfigError(f"checkpoint tensor '{name}' has shape {arr.shape}, model expects {p.data.shape}")
    for name, p in params.items():
        p.data = ckpt.named_tensors[name].astype(np.float32).copy()
