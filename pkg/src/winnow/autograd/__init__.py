"""From-scratch reverse-mode autodiff engine and NN building blocks."""
from . import functional, nn, optim
from .gradcheck import GradCheckResult, build_cases, gradcheck, run_suite
from .tensor import FiniteCheckError, Tensor, as_tensor, no_grad, set_finite_checks

__all__ = [
    "Tensor",
    "as_tensor",
    "no_grad",
    "set_finite_checks",
    "FiniteCheckError",
    "functional",
    "nn",
    "optim",
    "gradcheck",
    "run_suite",
    "build_cases",
    "GradCheckResult",
]
