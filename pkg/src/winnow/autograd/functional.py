"""Primitive differentiable operations.

Every op builds its output through Tensor._from_op with a closure that
pushes gradients to the op's inputs. Structured ops (convolutions,
recurrent scans, normalization) implement fused backwards for speed;
everything else composes. Shapes follow the conventions used across the
package: spectrogram-like tensors are [C, F, T], sequence tensors for
recurrent scans are [T, B, D].
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, _check_finite, as_tensor, grad_enabled


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _pair(a, b):
    a = as_tensor(a) if not isinstance(a, Tensor) else a
    if not isinstance(b, Tensor):
        b = Tensor(np.asarray(b, dtype=a.data.dtype))
    return a, b


# ---------------------------------------------------------------------------
# pointwise arithmetic


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return Tensor._from_op(out_data, (a, b), "add", backward)


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return Tensor._from_op(out_data, (a, b), "mul", backward)


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    out_data = a.data / b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g * out_data / b.data, b.data.shape))

    return Tensor._from_op(out_data, (a, b), "div", backward)


def power(x: Tensor, p: float) -> Tensor:
    p = float(p)
    out_data = x.data**p

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * p * x.data ** (p - 1.0))

    return Tensor._from_op(out_data, (x,), "power", backward)


def sqrt(x: Tensor) -> Tensor:
    out_data = np.sqrt(x.data)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * (0.5 / out_data))

    return Tensor._from_op(out_data, (x,), "sqrt", backward)


def exp(x: Tensor) -> Tensor:
    out_data = np.exp(x.data)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * out_data)

    return Tensor._from_op(out_data, (x,), "exp", backward)


def tanh(x: Tensor) -> Tensor:
    out_data = np.tanh(x.data)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * (1.0 - out_data * out_data))

    return Tensor._from_op(out_data, (x,), "tanh", backward)


def sigmoid(x: Tensor) -> Tensor:
    out_data = _sigmoid_np(x.data)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * out_data * (1.0 - out_data))

    return Tensor._from_op(out_data, (x,), "sigmoid", backward)


def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    # Piecewise form avoids overflow in exp for large |x|.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: Tensor) -> Tensor:
    out_data = np.maximum(x.data, 0.0)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * (x.data > 0))

    return Tensor._from_op(out_data, (x,), "relu", backward)


def prelu(x: Tensor, alpha: Tensor, channel_axis: int = 0) -> Tensor:
    """Parametric ReLU with one slope per channel along channel_axis."""
    shape = [1] * x.data.ndim
    shape[channel_axis] = alpha.data.shape[0]
    a = alpha.data.reshape(shape)
    mask = x.data > 0
    out_data = np.where(mask, x.data, a * x.data)

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.where(mask, g, a * g))
        if alpha.requires_grad:
            ga = np.where(mask, 0.0, g * x.data)
            axes = tuple(i for i in range(x.data.ndim) if i != channel_axis)
            alpha._accumulate(ga.sum(axis=axes))

    return Tensor._from_op(out_data, (x, alpha), "prelu", backward)


# ---------------------------------------------------------------------------
# shape manipulation


def cast(x: Tensor, dtype) -> Tensor:
    dtype = np.dtype(dtype)
    out_data = x.data.astype(dtype)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g.astype(x.data.dtype))

    return Tensor._from_op(out_data, (x,), "cast", backward)


def reshape(x: Tensor, shape) -> Tensor:
    out_data = x.data.reshape(shape)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g.reshape(x.data.shape))

    return Tensor._from_op(out_data, (x,), "reshape", backward)


def transpose(x: Tensor, axes=None) -> Tensor:
    out_data = np.transpose(x.data, axes)
    if axes is None:
        inv = None
    else:
        inv = np.argsort(axes)

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.transpose(g, inv))

    return Tensor._from_op(out_data, (x,), "transpose", backward)


def getitem(x: Tensor, idx) -> Tensor:
    out_data = x.data[idx]
    if not isinstance(out_data, np.ndarray):
        out_data = np.asarray(out_data, dtype=x.data.dtype)

    def backward(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, idx, g)
            x._accumulate(gx)

    return Tensor._from_op(out_data, (x,), "getitem", backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(start, stop)
                t._accumulate(g[tuple(sl)])

    return Tensor._from_op(out_data, tensors, "concat", backward)


def pad(x: Tensor, pads) -> Tensor:
    """Zero-pad; pads is a per-axis sequence of (before, after)."""
    pads = tuple((int(b), int(a)) for b, a in pads)
    out_data = np.pad(x.data, pads)

    def backward(g):
        if x.requires_grad:
            sl = tuple(slice(b, b + s) for (b, _), s in zip(pads, x.data.shape))
            x._accumulate(g[sl])

    return Tensor._from_op(out_data, (x,), "pad", backward)


def flip(x: Tensor, axis: int) -> Tensor:
    out_data = np.flip(x.data, axis=axis)

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.flip(g, axis=axis))

    return Tensor._from_op(out_data, (x,), "flip", backward)


# ---------------------------------------------------------------------------
# reductions and linear algebra


def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_data = x.data.sum(axis=axis, keepdims=keepdims)
    out_data = np.asarray(out_data, dtype=x.data.dtype)

    def backward(g):
        if not x.requires_grad:
            return
        if axis is None:
            x._accumulate(np.broadcast_to(g, x.data.shape).copy())
            return
        axes = axis if isinstance(axis, tuple) else (axis,)
        gk = g if keepdims else np.expand_dims(g, axes)
        x._accumulate(np.broadcast_to(gk, x.data.shape).copy())

    return Tensor._from_op(out_data, (x,), "sum", backward)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for ax in axes:
            count *= x.data.shape[ax]
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            if b.data.ndim == 1:
                ga = np.outer(g, b.data) if a.data.ndim == 2 else g[..., None] * b.data
            else:
                ga = g @ np.swapaxes(b.data, -1, -2)
            a._accumulate(_unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            if a.data.ndim == 1:
                gb = np.outer(a.data, g) if b.data.ndim == 2 else a.data[..., None] * g
            else:
                gb = np.swapaxes(a.data, -1, -2) @ g
            b._accumulate(_unbroadcast(gb, b.data.shape))

    return Tensor._from_op(out_data, (a, b), "matmul", backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        if x.requires_grad:
            dot = (g * out_data).sum(axis=axis, keepdims=True)
            x._accumulate(out_data * (g - dot))

    return Tensor._from_op(out_data, (x,), "softmax", backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, axis: int, eps: float = 1e-5) -> Tensor:
    """Normalize over a single axis, then scale/shift per position on it.

    gamma and beta are 1-D with length x.shape[axis].
    """
    ax = axis % x.data.ndim
    n = x.data.shape[ax]
    shape = [1] * x.data.ndim
    shape[ax] = n
    gam = gamma.data.reshape(shape)
    mu = x.data.mean(axis=ax, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=ax, keepdims=True)
    ivar = 1.0 / np.sqrt(var + eps)
    xhat = xc * ivar
    out_data = xhat * gam + beta.data.reshape(shape)

    def backward(g):
        other = tuple(i for i in range(x.data.ndim) if i != ax)
        if gamma.requires_grad:
            gamma._accumulate((g * xhat).sum(axis=other))
        if beta.requires_grad:
            beta._accumulate(g.sum(axis=other))
        if x.requires_grad:
            gh = g * gam
            s1 = gh.sum(axis=ax, keepdims=True)
            s2 = (gh * xhat).sum(axis=ax, keepdims=True)
            x._accumulate((ivar / n) * (n * gh - s1 - xhat * s2))

    return Tensor._from_op(out_data, (x, gamma, beta), "layer_norm", backward)


# ---------------------------------------------------------------------------
# convolutions


def _conv2d_cols(xp: np.ndarray, kf: int, kt: int, sf: int, st: int, dil_t: int):
    ekt = (kt - 1) * dil_t + 1
    v = sliding_window_view(xp, (kf, ekt), axis=(1, 2))
    v = v[:, ::sf, ::st, :, ::dil_t]
    cin, fo, to = v.shape[0], v.shape[1], v.shape[2]
    cols = np.ascontiguousarray(v.transpose(0, 3, 4, 1, 2)).reshape(cin * kf * kt, fo * to)
    return cols, fo, to


def conv2d_causal(
    x: Tensor,
    w: Tensor,
    b: Tensor | None,
    stride=(1, 1),
    freq_pad: int = 0,
    time_dilation: int = 1,
) -> Tensor:
    """2-D convolution over [C, F, T], causal along the time axis.

    Frequency is padded symmetrically by freq_pad; time is padded on the
    left only by (kT - 1) * time_dilation, so output frame t never reads
    input frames later than t. Weight layout is [C_out, C_in, kF, kT].
    """
    sf, st = stride
    cout, cin, kf, kt = w.data.shape
    if x.data.shape[0] != cin:
        raise ValueError(f"conv2d_causal: input has {x.data.shape[0]} channels, weight expects {cin}")
    pad_t = (kt - 1) * time_dilation
    xp = np.pad(x.data, ((0, 0), (freq_pad, freq_pad), (pad_t, 0)))
    cols, fo, to = _conv2d_cols(xp, kf, kt, sf, st, time_dilation)
    out_data = (w.data.reshape(cout, -1) @ cols).reshape(cout, fo, to)
    if b is not None:
        out_data = out_data + b.data[:, None, None]

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        g2 = g.reshape(cout, -1)
        if b is not None and b.requires_grad:
            b._accumulate(g.sum(axis=(1, 2)))
        if w.requires_grad:
            cols_b, _, _ = _conv2d_cols(xp, kf, kt, sf, st, time_dilation)
            w._accumulate((g2 @ cols_b.T).reshape(w.data.shape))
        if x.requires_grad:
            gcols = (w.data.reshape(cout, -1).T @ g2).reshape(cin, kf, kt, fo, to)
            gxp = np.zeros_like(xp)
            for i in range(kf):
                for j in range(kt):
                    gxp[:, i : i + sf * fo : sf, j * time_dilation : j * time_dilation + st * to : st] += gcols[:, i, j]
            f, t = x.data.shape[1], x.data.shape[2]
            x._accumulate(gxp[:, freq_pad : freq_pad + f, pad_t : pad_t + t])

    return Tensor._from_op(out_data, parents, "conv2d_causal", backward)


def conv2d_transpose_causal(
    x: Tensor,
    w: Tensor,
    b: Tensor | None,
    freq_stride: int = 1,
    freq_pad: int = 0,
    freq_out_pad: int = 0,
) -> Tensor:
    """Transposed 2-D convolution upsampling frequency, causal along time.

    Weight layout is [C_in, C_out, kF, kT]. Time stride is fixed at 1 and
    output frame t sums w[.., j] * x[.., t - j], so it depends only on the
    past. F_out = (F - 1) * freq_stride - 2 * freq_pad + kF + freq_out_pad.
    """
    cin, cout, kf, kt = w.data.shape
    if x.data.shape[0] != cin:
        raise ValueError(f"conv2d_transpose_causal: input has {x.data.shape[0]} channels, weight expects {cin}")
    f, t = x.data.shape[1], x.data.shape[2]
    f_out = (f - 1) * freq_stride - 2 * freq_pad + kf + freq_out_pad
    if f_out <= 0:
        raise ValueError("conv2d_transpose_causal: non-positive output height")
    f_buf = max((f - 1) * freq_stride + kf, freq_pad + f_out)
    out_full = np.zeros((cout, f_buf, t + kt - 1), dtype=x.data.dtype)
    for i in range(kf):
        for j in range(kt):
            contrib = np.tensordot(w.data[:, :, i, j], x.data, axes=(0, 0))
            out_full[:, i : i + f * freq_stride : freq_stride, j : j + t] += contrib
    out_data = out_full[:, freq_pad : freq_pad + f_out, :t]
    if b is not None:
        out_data = out_data + b.data[:, None, None]
    else:
        out_data = np.ascontiguousarray(out_data)

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        if b is not None and b.requires_grad:
            b._accumulate(g.sum(axis=(1, 2)))
        g_full = np.zeros((cout, f_buf, t + kt - 1), dtype=g.dtype)
        g_full[:, freq_pad : freq_pad + f_out, :t] = g
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            for i in range(kf):
                for j in range(kt):
                    sub = g_full[:, i : i + f * freq_stride : freq_stride, j : j + t]
                    gx += np.tensordot(w.data[:, :, i, j], sub, axes=(1, 0))
            x._accumulate(gx)
        if w.requires_grad:
            gw = np.zeros_like(w.data)
            xf = x.data.reshape(cin, -1)
            for i in range(kf):
                for j in range(kt):
                    sub = g_full[:, i : i + f * freq_stride : freq_stride, j : j + t]
                    gw[:, :, i, j] = xf @ sub.reshape(cout, -1).T
            w._accumulate(gw)

    return Tensor._from_op(out_data, parents, "conv2d_transpose_causal", backward)


def grouped_conv1d(x: Tensor, w: Tensor, b: Tensor | None, groups: int) -> Tensor:
    """Grouped 1-D convolution over [C, T], causal for kernel > 1.

    Weight layout is [C_out, C_in / groups, k]. Channels are split into
    `groups` blocks; block p of the output sees only block p of the input.
    """
    cout, cin_g, k = w.data.shape
    cin, t = x.data.shape
    if cin % groups or cout % groups:
        raise ValueError("grouped_conv1d: channels must divide evenly into groups")
    if cin // groups != cin_g:
        raise ValueError(f"grouped_conv1d: weight expects {cin_g} channels per group, input has {cin // groups}")
    xp = np.pad(x.data, ((0, 0), (k - 1, 0)))
    xg = xp.reshape(groups, cin_g, -1)
    v = sliding_window_view(xg, k, axis=2)  # [g, cin_g, T, k]
    cols = np.ascontiguousarray(v.transpose(0, 1, 3, 2)).reshape(groups, cin_g * k, t)
    wg = w.data.reshape(groups, cout // groups, cin_g * k)
    out_data = np.matmul(wg, cols).reshape(cout, t)
    if b is not None:
        out_data = out_data + b.data[:, None]

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gg = g.reshape(groups, cout // groups, t)
        if b is not None and b.requires_grad:
            b._accumulate(g.sum(axis=1))
        if w.requires_grad:
            gw = np.matmul(gg, cols.transpose(0, 2, 1))
            w._accumulate(gw.reshape(w.data.shape))
        if x.requires_grad:
            gcols = np.matmul(wg.transpose(0, 2, 1), gg).reshape(groups, cin_g, k, t)
            gxp = np.zeros_like(xp).reshape(groups, cin_g, -1)
            for j in range(k):
                gxp[:, :, j : j + t] += gcols[:, :, j]
            x._accumulate(gxp.reshape(cin, -1)[:, k - 1 :])

    return Tensor._from_op(out_data, parents, "grouped_conv1d", backward)


# ---------------------------------------------------------------------------
# recurrent scans

# Gate slices follow the usual packed order: LSTM i, f, g, o and GRU r, z, n.


def lstm_scan(x: Tensor, w_ih: Tensor, w_hh: Tensor, b: Tensor, h0=None, c0=None) -> Tensor:
    """Run an LSTM over x[T, B, D]; returns hidden states [T, B, H].

    Initial state defaults to zeros. Weights: w_ih [4H, D], w_hh [4H, H],
    bias [4H].
    """
    t_len, bsz, _ = x.data.shape
    hidden = w_hh.data.shape[1]
    dtype = x.data.dtype
    h = np.zeros((bsz, hidden), dtype=dtype) if h0 is None else h0
    c = np.zeros((bsz, hidden), dtype=dtype) if c0 is None else c0

    xp = x.data.reshape(t_len * bsz, -1) @ w_ih.data.T + b.data
    xp = xp.reshape(t_len, bsz, 4 * hidden)

    keep = grad_enabled() and (x.requires_grad or w_ih.requires_grad or w_hh.requires_grad or b.requires_grad)
    ys = np.empty((t_len, bsz, hidden), dtype=dtype)
    saved = [] if keep else None
    for t in range(t_len):
        gates = xp[t] + h @ w_hh.data.T
        i = _sigmoid_np(gates[:, :hidden])
        f = _sigmoid_np(gates[:, hidden : 2 * hidden])
        gg = np.tanh(gates[:, 2 * hidden : 3 * hidden])
        o = _sigmoid_np(gates[:, 3 * hidden :])
        c_prev = c
        c = f * c + i * gg
        tc = np.tanh(c)
        h_prev = h
        h = o * tc
        ys[t] = h
        if keep:
            saved.append((i, f, gg, o, c_prev, tc, h_prev))

    def backward(g):
        dh_next = np.zeros((bsz, hidden), dtype=dtype)
        dc_next = np.zeros((bsz, hidden), dtype=dtype)
        dxp = np.empty((t_len, bsz, 4 * hidden), dtype=dtype)
        d_whh = np.zeros_like(w_hh.data)
        for t in range(t_len - 1, -1, -1):
            i, f, gg, o, c_prev, tc, h_prev = saved[t]
            dh = g[t] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc * tc)
            di = dc * gg
            df = dc * c_prev
            dgg = dc * i
            dc_next = dc * f
            dg = dxp[t]
            dg[:, :hidden] = di * i * (1.0 - i)
            dg[:, hidden : 2 * hidden] = df * f * (1.0 - f)
            dg[:, 2 * hidden : 3 * hidden] = dgg * (1.0 - gg * gg)
            dg[:, 3 * hidden :] = do * o * (1.0 - o)
            if w_hh.requires_grad:
                d_whh += dg.T @ h_prev
            dh_next = dg @ w_hh.data
        if w_hh.requires_grad:
            w_hh._accumulate(d_whh)
        flat = dxp.reshape(t_len * bsz, 4 * hidden)
        if b.requires_grad:
            b._accumulate(flat.sum(axis=0))
        if w_ih.requires_grad:
            w_ih._accumulate(flat.T @ x.data.reshape(t_len * bsz, -1))
        if x.requires_grad:
            x._accumulate((flat @ w_ih.data).reshape(x.data.shape))

    return Tensor._from_op(ys, (x, w_ih, w_hh, b), "lstm_scan", backward)


def gru_scan(x: Tensor, w_ih: Tensor, w_hh: Tensor, b_ih: Tensor, b_hh: Tensor, h0=None) -> Tensor:
    """Run a GRU over x[T, B, D]; returns hidden states [T, B, H].

    Weights: w_ih [3H, D], w_hh [3H, H], biases [3H]. The candidate gate
    applies the reset gate to the recurrent term, as in the usual
    formulation n = tanh(W_in x + b_in + r * (W_hn h + b_hn)).
    """
    t_len, bsz, _ = x.data.shape
    hidden = w_hh.data.shape[1]
    dtype = x.data.dtype
    h = np.zeros((bsz, hidden), dtype=dtype) if h0 is None else h0

    xp = x.data.reshape(t_len * bsz, -1) @ w_ih.data.T + b_ih.data
    xp = xp.reshape(t_len, bsz, 3 * hidden)

    keep = grad_enabled() and any(p.requires_grad for p in (x, w_ih, w_hh, b_ih, b_hh))
    ys = np.empty((t_len, bsz, hidden), dtype=dtype)
    saved = [] if keep else None
    for t in range(t_len):
        hp = h @ w_hh.data.T + b_hh.data
        r = _sigmoid_np(xp[t, :, :hidden] + hp[:, :hidden])
        z = _sigmoid_np(xp[t, :, hidden : 2 * hidden] + hp[:, hidden : 2 * hidden])
        hp_n = hp[:, 2 * hidden :]
        n = np.tanh(xp[t, :, 2 * hidden :] + r * hp_n)
        h_prev = h
        h = (1.0 - z) * n + z * h
        ys[t] = h
        if keep:
            saved.append((r, z, n, hp_n, h_prev))

    def backward(g):
        dh_next = np.zeros((bsz, hidden), dtype=dtype)
        dxp = np.empty((t_len, bsz, 3 * hidden), dtype=dtype)
        d_whh = np.zeros_like(w_hh.data)
        d_bhh = np.zeros(3 * hidden, dtype=dtype)
        need_hh = w_hh.requires_grad
        for t in range(t_len - 1, -1, -1):
            r, z, n, hp_n, h_prev = saved[t]
            dh = g[t] + dh_next
            dz = dh * (h_prev - n)
            dn = dh * (1.0 - z)
            dgn = dn * (1.0 - n * n)
            dr = dgn * hp_n
            dhp = np.empty((bsz, 3 * hidden), dtype=dtype)
            dhp[:, :hidden] = dr * r * (1.0 - r)
            dhp[:, hidden : 2 * hidden] = dz * z * (1.0 - z)
            dhp[:, 2 * hidden :] = dgn * r
            dxp[t, :, :hidden] = dhp[:, :hidden]
            dxp[t, :, hidden : 2 * hidden] = dhp[:, hidden : 2 * hidden]
            dxp[t, :, 2 * hidden :] = dgn
            if need_hh:
                d_whh += dhp.T @ h_prev
            if b_hh.requires_grad:
                d_bhh += dhp.sum(axis=0)
            dh_next = dh * z + dhp @ w_hh.data
        if need_hh:
            w_hh._accumulate(d_whh)
        if b_hh.requires_grad:
            b_hh._accumulate(d_bhh)
        flat = dxp.reshape(t_len * bsz, 3 * hidden)
        if b_ih.requires_grad:
            b_ih._accumulate(flat.sum(axis=0))
        if w_ih.requires_grad:
            w_ih._accumulate(flat.T @ x.data.reshape(t_len * bsz, -1))
        if x.requires_grad:
            x._accumulate((flat @ w_ih.data).reshape(x.data.shape))

    return Tensor._from_op(ys, (x, w_ih, w_hh, b_ih, b_hh), "gru_scan", backward)


def lstm_step_np(x, h, c, w_ih, w_hh, b):
    """One LSTM step on plain arrays (streaming inference path).

    x: [B, D]; h, c: [B, H]. Returns (h_new, c_new). Shares the gate
    equations with lstm_scan so both paths stay numerically aligned.
    """
    hidden = w_hh.shape[1]
    gates = x @ w_ih.T + b + h @ w_hh.T
    i = _sigmoid_np(gates[:, :hidden])
    f = _sigmoid_np(gates[:, hidden : 2 * hidden])
    gg = np.tanh(gates[:, 2 * hidden : 3 * hidden])
    o = _sigmoid_np(gates[:, 3 * hidden :])
    c_new = f * c + i * gg
    h_new = o * np.tanh(c_new)
    return h_new, c_new


def gru_step_np(x, h, w_ih, w_hh, b_ih, b_hh):
    """One GRU step on plain arrays (streaming inference path)."""
    hidden = w_hh.shape[1]
    xp = x @ w_ih.T + b_ih
    hp = h @ w_hh.T + b_hh
    r = _sigmoid_np(xp[:, :hidden] + hp[:, :hidden])
    z = _sigmoid_np(xp[:, hidden : 2 * hidden] + hp[:, hidden : 2 * hidden])
    n = np.tanh(xp[:, 2 * hidden :] + r * hp[:, 2 * hidden :])
    return (1.0 - z) * n + z * h


# ---------------------------------------------------------------------------
# attention


def attention(q: Tensor, k: Tensor, v: Tensor, heads: int, causal: bool = False, window: int | None = None) -> Tensor:
    """Scaled dot-product attention over already-projected q, k, v.

    Inputs are [N, D] or [B, N, D]. With causal=True position i attends
    to j <= i only; window additionally caps the lookback to the most
    recent `window` positions. Without causal the attention is full
    (used along the frequency axis, where there is no direction of time).
    """
    squeeze = q.data.ndim == 2
    if squeeze:
        q, k, v = (reshape(t, (1,) + t.data.shape) for t in (q, k, v))
    bsz, n, d = q.data.shape
    if d % heads:
        raise ValueError(f"attention: model dim {d} not divisible by {heads} heads")
    dh = d // heads

    def split(t):
        t = reshape(t, (bsz, n, heads, dh))
        return transpose(t, (0, 2, 1, 3))  # [B, h, N, dh]

    qh, kh, vh = split(q), split(k), split(v)
    scores = matmul(qh, transpose(kh, (0, 1, 3, 2)))
    scores = mul(scores, 1.0 / np.sqrt(dh))
    if causal:
        i = np.arange(n)[:, None]
        j = np.arange(n)[None, :]
        valid = j <= i
        if window is not None:
            valid &= j > i - window
        mask = np.where(valid, 0.0, -1e30).astype(q.data.dtype)
        scores = add(scores, Tensor(mask))
    probs = softmax(scores, axis=-1)
    mixed = matmul(probs, vh)  # [B, h, N, dh]
    out = reshape(transpose(mixed, (0, 2, 1, 3)), (bsz, n, d))
    if squeeze:
        out = reshape(out, (n, d))
    return out
