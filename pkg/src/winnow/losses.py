"""Spectral training losses: real/imaginary MSE plus magnitude MSE.

Spectrograms are [2, F, T] (channel 0 real, channel 1 imaginary). A
"bin" is one (f, t) cell; the RI loss averages the per-bin complex
squared error over bins, so real and imaginary deviations add within a
bin before the mean.
"""
from __future__ import annotations

from dataclasses import dataclass

from .autograd import functional as F
from .autograd.tensor import Tensor

MAG_EPS = 1e-9  # inside the sqrt so the magnitude gradient exists at 0


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.5  # RI vs magnitude mix within a stage
    lam: float = 1.0  # weight of the fine stage in the total

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")


def _check_shapes(est: Tensor, target: Tensor) -> None:
    if est.data.shape != target.data.shape:
        raise ValueError(f"loss shape mismatch: est {est.data.shape} vs target {target.data.shape}")


def guarded_magnitude(spec: Tensor) -> Tensor:
    """|S| as (S_r^2 + S_i^2) / sqrt(S_r^2 + S_i^2 + eps).

    Exactly zero on zero bins, within eps/(2|S|^2) of |S| at scale, and
    differentiable everywhere (the plain sqrt has no gradient at 0).
    """
    r = F.getitem(spec, 0)
    i = F.getitem(spec, 1)
    q = F.add(F.mul(r, r), F.mul(i, i))
    return F.div(q, F.sqrt(F.add(q, MAG_EPS)))


def loss_ri(est: Tensor, target: Tensor) -> Tensor:
    """Mean over bins of (delta_r)^2 + (delta_i)^2."""
    _check_shapes(est, target)
    d = F.add(est, F.mul(target, -1.0))
    return F.mean(F.sum(F.mul(d, d), axis=0))


def loss_magnitude(est: Tensor, target: Tensor) -> Tensor:
    """Mean over bins of (|est| - |target|)^2 with the guarded magnitude."""
    _check_shapes(est, target)
    d = F.add(guarded_magnitude(est), F.mul(guarded_magnitude(target), -1.0))
    return F.mean(F.mul(d, d))


def loss_stage(est: Tensor, target: Tensor, alpha: float = 0.5) -> Tensor:
    """alpha * RI loss + (1 - alpha) * magnitude loss for one stage."""
    return F.add(F.mul(loss_ri(est, target), alpha), F.mul(loss_magnitude(est, target), 1.0 - alpha))


def loss_total(s_coarse: Tensor, s_fine: Tensor, target: Tensor, cfg: LossConfig = LossConfig()):
    """Joint two-stage loss; returns (total, stage1, stage2) tensors.

    The fine term is evaluated on the full assembled spectrum (the high
    band inherited from stage 1 included).
    """
    l_c = loss_stage(s_coarse, target, cfg.alpha)
    l_f = loss_stage(s_fine, target, cfg.alpha)
    return F.add(l_c, F.mul(l_f, cfg.lam)), l_c, l_f
