"""Model and training configuration with a strict, versioned JSON schema.

Unknown keys are errors, not warnings: a silently ignored typo in a
config is the fastest way to train the wrong model and not notice.
Every error names the offending field path.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LcrbConfig:
    """Complex filter bank geometry: `bins` spectrum bins in `bands` groups."""

    bands: int = 32
    bins: int = 256

    def validate(self, path="lcrb"):
        if self.bands <= 0 or self.bins <= 0:
            raise ConfigError(f"{path}: bands and bins must be positive")
        if self.bins % self.bands:
            raise ConfigError(f"{path}: bins ({self.bins}) not divisible by bands ({self.bands})")

    @property
    def bins_per_band(self) -> int:
        return self.bins // self.bands


@dataclass(frozen=True)
class CoarseConfig:
    """U-shaped stage-1 geometry over the compact band features."""

    input_bins: int = 32
    enc_channels: tuple = (64, 64, 64)
    kernels: tuple = ((5, 2), (3, 2), (3, 2))
    strides: tuple = ((2, 1), (2, 1), (1, 1))
    freq_pads: tuple = (2, 1, 1)
    dp_blocks: int = 2
    dp_hidden: int = 64

    def validate(self, path="coarse"):
        n = len(self.enc_channels)
        if not (len(self.kernels) == len(self.strides) == len(self.freq_pads) == n):
            raise ConfigError(f"{path}: enc_channels/kernels/strides/freq_pads lengths disagree")
        if n == 0:
            raise ConfigError(f"{path}: at least one encoder layer required")
        if self.dp_blocks < 0 or self.dp_hidden <= 0:
            raise ConfigError(f"{path}: dp_blocks must be >= 0 and dp_hidden > 0")
        if self.dp_hidden % 2:
            raise ConfigError(f"{path}: dp_hidden must be even (split across two frequency directions)")
        f = self.input_bins
        for i, ((kf, _), (sf, st), p) in enumerate(zip(self.kernels, self.strides, self.freq_pads)):
            if st != 1:
                raise ConfigError(f"{path}.strides[{i}]: time stride must be 1 (hop-synchronous streaming)")
            f = (f + 2 * p - kf) // sf + 1
            if f < 1:
                raise ConfigError(f"{path}: encoder layer {i} collapses frequency to {f}")
        return f

    def freq_sizes(self) -> list[int]:
        """Frequency size after each encoder layer, starting at the input."""
        sizes = [self.input_bins]
        for (kf, _), (sf, _), p in zip(self.kernels, self.strides, self.freq_pads):
            sizes.append((sizes[-1] + 2 * p - kf) // sf + 1)
        return sizes


@dataclass(frozen=True)
class FineConfig:
    """Single-scale stage-2 geometry over the low-frequency band."""

    low_bins: int = 128
    in_channels: int = 4
    feature_maps: int = 48
    dp_blocks: int = 2
    codec_dilations: tuple = (1, 2, 4)
    kernel: tuple = (3, 3)
    attention_heads: int = 4

    def validate(self, path="fine"):
        if self.in_channels != 4:
            raise ConfigError(f"{path}.in_channels: must be 4 (noisy RI + stage-1 RI), got {self.in_channels}")
        if self.feature_maps % self.attention_heads:
            raise ConfigError(
                f"{path}: feature_maps ({self.feature_maps}) not divisible by attention_heads ({self.attention_heads})"
            )
        if self.kernel[0] % 2 == 0:
            raise ConfigError(f"{path}.kernel: frequency kernel must be odd to preserve the bin count")
        if self.low_bins <= 0 or self.dp_blocks < 0:
            raise ConfigError(f"{path}: low_bins must be > 0 and dp_blocks >= 0")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters; defaults follow the reference recipe."""

    lr: float = 0.0004
    clip_norm: float = 5.0
    mixtures_per_epoch: int = 20
    duration_s: float = 4.0
    snr_low_db: float = -5.0
    snr_high_db: float = 20.0
    alpha: float = 0.5
    lam: float = 1.0

    def validate(self, path="training"):
        if self.lr <= 0 or self.clip_norm <= 0:
            raise ConfigError(f"{path}: lr and clip_norm must be positive")
        if self.snr_high_db < self.snr_low_db:
            raise ConfigError(f"{path}: snr_high_db < snr_low_db")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"{path}.alpha: must be in [0, 1]")
        if self.lam < 0:
            raise ConfigError(f"{path}.lam: must be >= 0")


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to rebuild a model, one serializable record."""

    schema_version: int = SCHEMA_VERSION
    lcrb: LcrbConfig | None = field(default_factory=LcrbConfig)
    coarse: CoarseConfig | None = field(default_factory=CoarseConfig)
    fine: FineConfig | None = field(default_factory=FineConfig)
    training: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> "ModelConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {self.schema_version}")
        if self.lcrb is not None:
            self.lcrb.validate()
        if self.coarse is not None:
            self.coarse.validate()
            if self.lcrb is not None and self.coarse.input_bins != self.lcrb.bands:
                raise ConfigError(
                    f"coarse.input_bins ({self.coarse.input_bins}) must equal lcrb.bands ({self.lcrb.bands})"
                )
        if self.fine is not None:
            self.fine.validate()
            if self.lcrb is not None and self.fine.low_bins > self.lcrb.bins:
                raise ConfigError(f"fine.low_bins ({self.fine.low_bins}) exceeds lcrb.bins ({self.lcrb.bins})")
        self.training.validate()
        return self

    def to_dict(self) -> dict:
        return _to_plain(self)

    @staticmethod
    def from_dict(d: dict) -> "ModelConfig":
        cfg = _from_plain(ModelConfig, d, path="")
        return cfg.validate()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def from_json(text: str) -> "ModelConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        if not isinstance(d, dict):
            raise ConfigError("config JSON must be an object")
        return ModelConfig.from_dict(d)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


_OPTIONAL_SECTIONS = {"lcrb", "coarse", "fine"}


def _from_plain(cls, d, path):
    if not isinstance(d, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(d).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in d:
        if key not in fields:
            raise ConfigError(f"unknown config key '{path + '.' if path else ''}{key}'")
    kwargs = {}
    for name, f in fields.items():
        sub_path = f"{path}.{name}" if path else name
        if name not in d:
            continue  # dataclass default applies
        value = d[name]
        if value is None and name in _OPTIONAL_SECTIONS and cls is ModelConfig:
            kwargs[name] = None
            continue
        if dataclasses.is_dataclass(_field_dataclass(f)):
            kwargs[name] = _from_plain(_field_dataclass(f), value, sub_path)
        else:
            kwargs[name] = _coerce_value(f, value, sub_path)
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{path or 'config'}: {e}") from e


def _field_dataclass(f):
    # Fields are annotated either with a dataclass, `X | None`, or a plain type.
    t = f.type
    mapping = {
        "LcrbConfig | None": LcrbConfig,
        "CoarseConfig | None": CoarseConfig,
        "FineConfig | None": FineConfig,
        "TrainConfig": TrainConfig,
        "LcrbConfig": LcrbConfig,
        "CoarseConfig": CoarseConfig,
        "FineConfig": FineConfig,
    }
    return mapping.get(t if isinstance(t, str) else getattr(t, "__name__", None))


def _coerce_value(f, value, path):
    default = f.default if f.default is not dataclasses.MISSING else None
    if isinstance(default, bool) or f.type == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if isinstance(default, int) or f.type == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or f.type == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple) or f.type == "tuple":
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        return _deep_tuple(value)
    return value


def _deep_tuple(v):
    if isinstance(v, (list, tuple)):
        return tuple(_deep_tuple(x) for x in v)
    return v


def reference_config() -> ModelConfig:
    """The full-size configuration matching the published budget rows."""
    return ModelConfig().validate()


def tiny_config() -> ModelConfig:
    """A scaled-down configuration for fast tests and the toy training run."""
    return ModelConfig(
        coarse=CoarseConfig(enc_channels=(16, 16, 16), dp_blocks=1, dp_hidden=16),
        fine=FineConfig(feature_maps=12, dp_blocks=1, codec_dilations=(1, 2), attention_heads=2),
    ).validate()


def load_config(path) -> ModelConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ModelConfig.from_json(fh.read())


def save_config(path, cfg: ModelConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cfg.to_json() + "\n")
