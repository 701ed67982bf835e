"""winnow: causal streaming speech enhancement on a numpy autograd engine.

Two-stage mask estimation over a learnable complex filter bank: a
U-shaped coarse stage predicts a full-band complex mask at reduced band
resolution, and a single-scale fine stage refines the low-frequency
band. Everything runs on the in-package reverse-mode autodiff engine;
numpy supplies the array arithmetic underneath.
"""
from .audio import read_wav, write_wav
from .autograd import Tensor, no_grad
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, reference_config, tiny_config
from .frontend import HOP, SAMPLE_RATE, WIN, apply_complex_mask, istft, stft
from .model import TwoStageEnhancer, build_model
from .pipeline import StreamingEnhancer, enhance_offline, enhance_streaming
from .profiler import count_macs, count_params, profile_model, si_sdr

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "no_grad",
    "read_wav",
    "write_wav",
    "save_checkpoint",
    "load_checkpoint",
    "ModelConfig",
    "reference_config",
    "tiny_config",
    "stft",
    "istft",
    "apply_complex_mask",
    "SAMPLE_RATE",
    "HOP",
    "WIN",
    "TwoStageEnhancer",
    "build_model",
    "enhance_offline",
    "enhance_streaming",
    "StreamingEnhancer",
    "count_params",
    "count_macs",
    "profile_model",
    "si_sdr",
    "__version__",
]
