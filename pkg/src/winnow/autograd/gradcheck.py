"""Finite-difference gradient verification for the autograd ops.

Each case builds small float64 inputs, runs the op, reduces the output
with a fixed random projection, and compares analytic input gradients
against central differences. The registered suite covers every
structured primitive at three or more shape configurations, plus a
deliberately broken op that must fail (a checker that cannot reject a
wrong gradient proves nothing).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import functional as F
from .tensor import Tensor, no_grad


@dataclass
class GradCheckCase:
    name: str
    fn: object  # callable(*tensors) -> Tensor
    inputs: list
    expect_fail: bool = False


@dataclass
class GradCheckResult:
    name: str
    max_rel_error: float
    tolerance: float
    passed: bool


def gradcheck(fn, inputs, tolerance: float = 1e-5, step: float = 1e-4) -> float:
    """Max relative error between analytic and numeric gradients.

    fn maps the input Tensors to one output Tensor of any shape; the
    output is reduced to a scalar with a fixed random projection so every
    output element influences the check.
    """
    out = fn(*inputs)
    rng = np.random.default_rng(12345)
    proj = rng.standard_normal(out.data.shape).astype(out.data.dtype)

    def scalar_loss():
        with no_grad():
            return float(np.sum(fn(*inputs).data * proj))

    loss = F.sum(F.mul(out, Tensor(proj)))
    for x in inputs:
        x.grad = None
    loss.backward()

    worst = 0.0
    for x in inputs:
        analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
        flat = x.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = scalar_loss()
            flat[i] = orig - step
            f_minus = scalar_loss()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(analytic.reshape(-1)[i])
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if rel > worst:
                worst = rel
    return worst


def _t(rng, *shape, lo=-1.0, hi=1.0, avoid_zero=False):
    data = rng.uniform(lo, hi, size=shape)
    if avoid_zero:
        data = np.where(np.abs(data) < 0.05, data + 0.1 * np.sign(data + 1e-12), data)
    return Tensor(data.astype(np.float64), requires_grad=True)


def build_cases(seed: int = 7) -> list:
    """The registered suite: every structured op, three shapes each."""
    rng = np.random.default_rng(seed)
    cases: list[GradCheckCase] = []

    def case(name, fn, *inputs, expect_fail=False):
        cases.append(GradCheckCase(name, fn, list(inputs), expect_fail))

    # pointwise and broadcasting
    case("add_same", F.add, _t(rng, 3, 4), _t(rng, 3, 4))
    case("add_broadcast_row", F.add, _t(rng, 3, 4), _t(rng, 4))
    case("add_broadcast_col", F.add, _t(rng, 3, 4), _t(rng, 3, 1))
    case("mul_same", F.mul, _t(rng, 2, 3, 2), _t(rng, 2, 3, 2))
    case("mul_broadcast", F.mul, _t(rng, 2, 3, 2), _t(rng, 3, 1))
    case("mul_scalar_operand", F.mul, _t(rng, 5), _t(rng))
    case("div", F.div, _t(rng, 3, 3), _t(rng, 3, 3, lo=0.5, hi=2.0))
    case("div_broadcast", F.div, _t(rng, 2, 4), _t(rng, 4, lo=0.5, hi=2.0))
    case("power2", lambda x: F.power(x, 2.0), _t(rng, 4, 3))
    case("sqrt", F.sqrt, _t(rng, 3, 4, lo=0.5, hi=2.0))
    case("exp", F.exp, _t(rng, 3, 3))
    case("tanh", F.tanh, _t(rng, 4, 2))
    case("sigmoid", F.sigmoid, _t(rng, 4, 2))
    case("relu", F.relu, _t(rng, 4, 4, avoid_zero=True))
    case("prelu_ax0", lambda x, a: F.prelu(x, a, 0), _t(rng, 3, 4, 2, avoid_zero=True), _t(rng, 3, lo=0.1, hi=0.5))
    case("prelu_ax1", lambda x, a: F.prelu(x, a, 1), _t(rng, 2, 4, 3, avoid_zero=True), _t(rng, 4, lo=0.1, hi=0.5))

    # shape ops
    case("reshape", lambda x: F.reshape(x, (6, 2)), _t(rng, 3, 4))
    case("transpose", lambda x: F.transpose(x, (2, 0, 1)), _t(rng, 2, 3, 4))
    case("getitem_slice", lambda x: F.getitem(x, (slice(None), slice(1, 3))), _t(rng, 3, 5))
    case("getitem_stride", lambda x: F.getitem(x, (slice(None), slice(None, None, 2))), _t(rng, 2, 6))
    case("concat", lambda a, b: F.concat([a, b], axis=1), _t(rng, 2, 3), _t(rng, 2, 2))
    case("pad", lambda x: F.pad(x, ((0, 0), (2, 1))), _t(rng, 2, 3))
    case("flip", lambda x: F.flip(x, 0), _t(rng, 4, 2))

    # reductions, matmul
    case("sum_all", F.sum, _t(rng, 3, 4))
    case("sum_axis", lambda x: F.sum(x, axis=1), _t(rng, 2, 3, 4))
    case("mean_keep", lambda x: F.mean(x, axis=(0, 2), keepdims=True), _t(rng, 2, 3, 4))
    case("matmul_2d", F.matmul, _t(rng, 3, 4), _t(rng, 4, 2))
    case("matmul_batched", F.matmul, _t(rng, 2, 3, 4), _t(rng, 2, 4, 3))
    case("matmul_broadcast", F.matmul, _t(rng, 2, 2, 3, 4), _t(rng, 4, 3))

    # normalization and softmax
    case("softmax_last", lambda x: F.softmax(x, -1), _t(rng, 3, 5))
    case("softmax_mid", lambda x: F.softmax(x, 1), _t(rng, 2, 4, 3))
    case("layer_norm_ax0", lambda x, g, b: F.layer_norm(x, g, b, 0), _t(rng, 4, 3, 2), _t(rng, 4), _t(rng, 4))
    case("layer_norm_last", lambda x, g, b: F.layer_norm(x, g, b, -1), _t(rng, 3, 5), _t(rng, 5), _t(rng, 5))
    case("layer_norm_mid", lambda x, g, b: F.layer_norm(x, g, b, 1), _t(rng, 2, 6, 2), _t(rng, 6), _t(rng, 6))

    # convolutions
    case(
        "conv2d_k32_s21",
        lambda x, w, b: F.conv2d_causal(x, w, b, stride=(2, 1), freq_pad=1),
        _t(rng, 2, 6, 5), _t(rng, 3, 2, 3, 2), _t(rng, 3),
    )
    case(
        "conv2d_k52_s21",
        lambda x, w, b: F.conv2d_causal(x, w, b, stride=(2, 1), freq_pad=2),
        _t(rng, 2, 8, 4), _t(rng, 2, 2, 5, 2), _t(rng, 2),
    )
    case(
        "conv2d_k33_dil2",
        lambda x, w, b: F.conv2d_causal(x, w, b, stride=(1, 1), freq_pad=1, time_dilation=2),
        _t(rng, 2, 5, 7), _t(rng, 2, 2, 3, 3), _t(rng, 2),
    )
    case(
        "conv2d_nobias",
        lambda x, w: F.conv2d_causal(x, w, None, stride=(1, 1), freq_pad=0),
        _t(rng, 3, 4, 4), _t(rng, 2, 3, 2, 2),
    )
    case(
        "convT_k32_s2",
        lambda x, w, b: F.conv2d_transpose_causal(x, w, b, freq_stride=2, freq_pad=1),
        _t(rng, 3, 4, 4), _t(rng, 3, 2, 3, 2), _t(rng, 2),
    )
    case(
        "convT_k52_s2_opad1",
        lambda x, w, b: F.conv2d_transpose_causal(x, w, b, freq_stride=2, freq_pad=2, freq_out_pad=1),
        _t(rng, 2, 5, 3), _t(rng, 2, 2, 5, 2), _t(rng, 2),
    )
    case(
        "convT_k33_s1",
        lambda x, w, b: F.conv2d_transpose_causal(x, w, b, freq_stride=1, freq_pad=1),
        _t(rng, 2, 6, 3), _t(rng, 2, 3, 3, 3), _t(rng, 3),
    )
    case(
        "grouped1d_g2_k1",
        lambda x, w: F.grouped_conv1d(x, w, None, groups=2),
        _t(rng, 4, 5), _t(rng, 6, 2, 1),
    )
    case(
        "grouped1d_g4_k1",
        lambda x, w, b: F.grouped_conv1d(x, w, b, groups=4),
        _t(rng, 8, 3), _t(rng, 4, 2, 1), _t(rng, 4),
    )
    case(
        "grouped1d_g2_k2",
        lambda x, w: F.grouped_conv1d(x, w, None, groups=2),
        _t(rng, 4, 6), _t(rng, 4, 2, 2),
    )

    # recurrent cells (scan form exercises the cell equations plus BPTT)
    for tag, (t_len, bsz, d, h) in {"a": (3, 2, 3, 4), "b": (5, 1, 2, 3), "c": (2, 3, 4, 2)}.items():
        case(
            f"lstm_{tag}",
            F.lstm_scan,
            _t(rng, t_len, bsz, d), _t(rng, 4 * h, d), _t(rng, 4 * h, h), _t(rng, 4 * h),
        )
        case(
            f"gru_{tag}",
            F.gru_scan,
            _t(rng, t_len, bsz, d), _t(rng, 3 * h, d), _t(rng, 3 * h, h), _t(rng, 3 * h), _t(rng, 3 * h),
        )

    # attention
    case("attn_causal", lambda q, k, v: F.attention(q, k, v, heads=2, causal=True), _t(rng, 4, 4), _t(rng, 4, 4), _t(rng, 4, 4))
    case("attn_full", lambda q, k, v: F.attention(q, k, v, heads=2), _t(rng, 2, 3, 4), _t(rng, 2, 3, 4), _t(rng, 2, 3, 4))
    case(
        "attn_causal_window2",
        lambda q, k, v: F.attention(q, k, v, heads=1, causal=True, window=2),
        _t(rng, 5, 3), _t(rng, 5, 3), _t(rng, 5, 3),
    )

    # spectral losses (defined in winnow.losses; imported lazily to keep
    # the engine importable on its own)
    from ..losses import loss_magnitude, loss_ri, loss_stage

    case("loss_ri", loss_ri, _t(rng, 2, 4, 3), _t(rng, 2, 4, 3))
    case("loss_magnitude", loss_magnitude, _t(rng, 2, 4, 3), _t(rng, 2, 4, 3))
    case("loss_stage", loss_stage, _t(rng, 2, 5, 2), _t(rng, 2, 5, 2))

    # negative control: tanh with a corrupted backward; the checker must
    # reject it or the whole suite is meaningless
    def broken_tanh(x):
        out_data = np.tanh(x.data)

        def backward(g):
            x._accumulate(g * (1.0 + out_data * out_data))

        return Tensor._from_op(out_data, (x,), "broken_tanh", backward)

    case("negative_control_broken_tanh", broken_tanh, _t(rng, 3, 3), expect_fail=True)
    return cases


def run_suite(tolerance: float = 1e-5, step: float = 1e-4, seed: int = 7) -> list:
    """Run every registered case; expect_fail cases pass by failing."""
    results = []
    for c in build_cases(seed):
        err = gradcheck(c.fn, c.inputs, tolerance=tolerance, step=step)
        ok = (err < tolerance) != c.expect_fail
        results.append(GradCheckResult(c.name, err, tolerance, ok))
    return results
