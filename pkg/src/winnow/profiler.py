"""Model cost accounting and signal quality metrics.

Parameter counts walk the same named-tensor registry the checkpoint
format serializes, so the two can be cross-checked. MAC counts follow a
stated convention: one multiply-accumulate per weight application, a
complex multiply counts as four real MACs, recurrent gates and
attention score/mix matmuls are counted, and elementwise activations,
normalizations, residual adds, and the FFT frontend are excluded.
Per-second figures assume the fixed 62.5 frames/s hop rate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .audio import SAMPLE_RATE
from .frontend import HOP
from .model import TwoStageEnhancer

FRAMES_PER_SECOND = SAMPLE_RATE / HOP  # 62.5

MAC_CONVENTION = (
    "1 MAC = one multiply-accumulate; complex multiply = 4 real MACs; "
    "conv/linear/recurrent/attention matmuls counted; activations, norms, "
    "residual adds, and the FFT frontend excluded; per-second figures use "
    f"{FRAMES_PER_SECOND:g} frames/s."
)


@dataclass
class LayerProfile:
    name: str
    params: int
    macs_per_frame: int

    @property
    def macs_per_second(self) -> float:
        return self.macs_per_frame * FRAMES_PER_SECOND


@dataclass
class ProfileReport:
    layers: list
    total_params: int
    total_macs_per_second: float
    coarse_params: int  # filter bank + coarse stage subtotal
    coarse_macs_per_second: float
    convention: str = MAC_CONVENTION

    def to_dict(self) -> dict:
        return {
            "convention": self.convention,
            "frames_per_second": FRAMES_PER_SECOND,
            "layers": [
                {"name": l.name, "params": l.params, "macs_per_second": l.macs_per_second} for l in self.layers
            ],
            "coarse_stage": {"params": self.coarse_params, "macs_per_second": self.coarse_macs_per_second},
            "total": {"params": self.total_params, "macs_per_second": self.total_macs_per_second},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        rows = [(l.name, f"{l.params:,}", f"{l.macs_per_second:,.0f}") for l in self.layers]
        rows.append(("coarse stage subtotal", f"{self.coarse_params:,}", f"{self.coarse_macs_per_second:,.0f}"))
        rows.append(("total", f"{self.total_params:,}", f"{self.total_macs_per_second:,.0f}"))
        headers = ("layer", "params", "MACs/s")
        widths = [max(len(headers[i]), max(len(r[i]) for r in rows)) for i in range(3)]
        lines = [f"# {self.convention}"]
        lines.append(f"{headers[0]:<{widths[0]}}  {headers[1]:>{widths[1]}}  {headers[2]:>{widths[2]}}")
        lines.append("-" * (widths[0] + widths[1] + widths[2] + 4))
        for i, r in enumerate(rows):
            if i == len(rows) - 2:
                lines.append("-" * (widths[0] + widths[1] + widths[2] + 4))
            lines.append(f"{r[0]:<{widths[0]}}  {r[1]:>{widths[1]}}  {r[2]:>{widths[2]}}")
        return "\n".join(lines)


def count_params(model: TwoStageEnhancer) -> int:
    """Total trainable scalar count, from the named-parameter registry."""
    return model.num_parameters()


def count_macs(model: TwoStageEnhancer, seconds: float = 1.0) -> float:
    """Multiply-accumulates to process `seconds` of audio (see MAC_CONVENTION)."""
    per_frame = sum(m for _, _, m in model.profile_items())
    return per_frame * FRAMES_PER_SECOND * seconds


def profile_model(model: TwoStageEnhancer) -> ProfileReport:
    layers = [LayerProfile(name, p, m) for name, p, m in model.profile_items()]
    coarse_layers = [l for l in layers if l.name.startswith(("lcrb.", "coarse."))]
    return ProfileReport(
        layers=layers,
        total_params=sum(l.params for l in layers),
        total_macs_per_second=sum(l.macs_per_second for l in layers),
        coarse_params=sum(l.params for l in coarse_layers),
        coarse_macs_per_second=sum(l.macs_per_second for l in coarse_layers),
    )


def si_sdr(estimate: np.ndarray, reference: np.ndarray) -> float:
    """Scale-invariant signal-to-distortion ratio in dB (float64 math)."""
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1:
        raise ValueError(f"si_sdr expects two equal-length 1-D arrays, got {est.shape} and {ref.shape}")
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise ValueError("si_sdr reference is identically zero")
    alpha = float(np.dot(est, ref)) / ref_energy
    target = alpha * ref
    err = est - target
    num = float(np.dot(target, target))
    den = float(np.dot(err, err)) + 1e-12
    return 10.0 * np.log10(num / den + 1e-12)
