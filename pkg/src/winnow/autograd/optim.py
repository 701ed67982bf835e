"""Optimization: Adam with bias correction, gradient clipping, lr decay."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


def clip_global_norm(grads, max_norm: float) -> float:
    """Scale a set of gradient arrays in place so their joint L2 norm
    is at most max_norm. Returns the pre-clip norm.

    The norm is computed in float64 over every element of every array,
    so the clip behaves as one global constraint, not per-tensor.
    """
    total = 0.0
    for g in grads:
        total += float(np.sum(g.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        seen = set()
        for g in grads:
            # Two tensors can share one gradient buffer; scale it once.
            if id(g) not in seen:
                seen.add(id(g))
                g *= scale
    return norm


def lr_schedule(initial_lr: float, epoch: int) -> float:
    """Exponential decay: multiply by 0.98 every 2 epochs (epoch is 0-based)."""
    return initial_lr * 0.98 ** (epoch // 2)


class Adam:
    """Adam over a named parameter dict, with bias-corrected moments."""

    def __init__(self, params: dict[str, Tensor], lr: float = 4e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self) -> None:
        """Apply one update from the gradients currently on the params."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
