"""Training loop: joint two-stage spectral loss on synthetic mixtures.

Each step runs the full model on one mixture spectrogram, combines the
coarse- and fine-stage losses, backpropagates, clips the global
gradient norm, and applies one Adam update. The learning rate follows a
halving-free exponential decay per epoch pair. Training is
deterministic for a fixed seed: data, initialization, and update order
are all generator-driven.

Artifacts written under ``out_dir``: a checkpoint after every epoch
(``epoch_NNN.thln``), the final checkpoint (``final.thln``), a loss
history CSV (``history.csv`` with columns
``step,epoch,lr,loss_coarse,loss_fine,loss_total``), and the resolved
config (``config.json``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autograd.optim import Adam, clip_global_norm, lr_schedule
from .autograd.tensor import FiniteCheckError, Tensor
from .checkpoint import save_checkpoint
from .config import ModelConfig
from .data import synthesize_batch
from .errors import WinnowError
from .frontend import stft
from .losses import LossConfig, loss_total
from .model import TwoStageEnhancer

HISTORY_COLUMNS = ("step", "epoch", "lr", "loss_coarse", "loss_fine", "loss_total")


class TrainingDiverged(WinnowError):
    """A non-finite value appeared during training."""


@dataclass
class StepRecord:
    step: int
    epoch: int
    lr: float
    loss_coarse: float
    loss_fine: float
    loss_total: float

    def row(self) -> list:
        return [self.step, self.epoch, f"{self.lr:.8g}", f"{self.loss_coarse:.8g}", f"{self.loss_fine:.8g}", f"{self.loss_total:.8g}"]


def train_step(
    model: TwoStageEnhancer,
    optimizer: Adam,
    mixture: np.ndarray,
    clean: np.ndarray,
    loss_cfg: LossConfig,
    clip_norm: float,
) -> tuple:
    """One optimization step; returns (loss_coarse, loss_fine, loss_total, grad_norm)."""
    x = Tensor(stft(np.asarray(mixture, dtype=np.float32)))
    target = Tensor(stft(np.asarray(clean, dtype=np.float32)))
    s_fine, s_coarse = model.forward(x)
    total, l_c, l_f = loss_total(s_coarse, s_fine, target, loss_cfg)
    model.zero_grad()
    total.backward()
    grads = [p.grad for p in optimizer.params.values() if p.grad is not None]
    grad_norm = clip_global_norm(grads, clip_norm)
    optimizer.step()
    return float(l_c.data), float(l_f.data), float(total.data), grad_norm


def train(
    model: TwoStageEnhancer,
    epochs: int,
    seed: int = 0,
    out_dir=None,
    mixtures_per_epoch: int | None = None,
) -> list:
    """Train in place; returns the per-step loss history as StepRecords."""
    cfg = model.config
    tcfg = cfg.training
    loss_cfg = LossConfig(alpha=tcfg.alpha, lam=tcfg.lam)
    count = tcfg.mixtures_per_epoch if mixtures_per_epoch is None else mixtures_per_epoch
    optimizer = Adam(model.parameters(), lr=tcfg.lr)
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "config.json").write_text(cfg.to_json())

    history: list[StepRecord] = []
    step = 0
    for epoch in range(epochs):
        optimizer.lr = lr_schedule(tcfg.lr, epoch)
        batch = synthesize_batch(
            seed=(seed * 1_000_003 + epoch) & 0x7FFFFFFF,
            count=count,
            duration_s=tcfg.duration_s,
            snr_low_db=tcfg.snr_low_db,
            snr_high_db=tcfg.snr_high_db,
        )
        for mixture, clean in batch:
            try:
                l_c, l_f, l_total, _ = train_step(model, optimizer, mixture, clean, loss_cfg, tcfg.clip_norm)
            except FiniteCheckError as e:
                raise TrainingDiverged(f"non-finite value at step {step} (epoch {epoch}): {e}") from e
            if not np.isfinite(l_total):
                raise TrainingDiverged(f"loss became non-finite at step {step} (epoch {epoch})")
            history.append(StepRecord(step, epoch, optimizer.lr, l_c, l_f, l_total))
            step += 1
        if out_path is not None:
            save_checkpoint(out_path / f"epoch_{epoch + 1:03d}.thln", model.parameters(), cfg)

    if out_path is not None:
        save_checkpoint(out_path / "final.thln", model.parameters(), cfg)
        write_history(out_path / "history.csv", history)
    return history


def write_history(path, history) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for rec in history:
            writer.writerow(rec.row())
