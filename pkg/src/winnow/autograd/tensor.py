"""Dense float tensors with reverse-mode automatic differentiation.

A Tensor wraps a numpy array together with an optional gradient and a
closure that knows how to push gradients to its parents. Calling
``backward()`` on a scalar walks the graph in reverse topological order.
Only float32 and float64 are supported; every op checks its output for
NaN/Inf so numerical blowups fail at the op that produced them instead
of surfacing later as a mysteriously bad loss.
"""
from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

# Module-level switches. Not thread-safe; the engine is single-threaded.
_grad_enabled = True
_finite_checks = True


class FiniteCheckError(FloatingPointError):
    """Raised when an op produces NaN or Inf while finite checks are on."""

    def __init__(self, op: str, what: str = "output"):
        super().__init__(f"non-finite values in {what} of op '{op}'")
        self.op = op


def set_finite_checks(enabled: bool) -> None:
    """Globally enable or disable NaN/Inf detection at op boundaries."""
    global _finite_checks
    _finite_checks = bool(enabled)


def finite_checks_enabled() -> bool:
    return _finite_checks


def grad_enabled() -> bool:
    return _grad_enabled


@contextmanager
def no_grad():
    """Context manager that disables graph construction inside its body."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _check_finite(arr: np.ndarray, op: str, what: str = "output") -> None:
    if _finite_checks and not np.all(np.isfinite(arr)):
        raise FiniteCheckError(op, what)


def _coerce(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype not in _FLOAT_DTYPES:
        if not (np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.floating) or np.issubdtype(arr.dtype, np.bool_)):
            raise TypeError(f"unsupported dtype {arr.dtype}; only float32/float64 tensors exist")
        arr = arr.astype(np.float32)
    return arr


class Tensor:
    """A numpy array plus the bookkeeping needed for reverse-mode autodiff.

    Attributes:
        data: the underlying ndarray (float32 or float64).
        grad: accumulated gradient, or None before backward touches it.
        requires_grad: whether gradients should flow to this tensor.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn", "_op", "_done")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _coerce(data)
        _check_finite(self.data, "leaf", "data")
        self.grad = None
        self.requires_grad = bool(requires_grad) and _grad_enabled
        self._parents: tuple = ()
        self._backward_fn = None
        self._op = "leaf"
        self._done = False

    # -- graph construction -------------------------------------------------

    @staticmethod
    def _from_op(data: np.ndarray, parents, op: str, backward_fn):
        """Build a graph node. backward_fn(grad) pushes grad to parents."""
        _check_finite(data, op)
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out._op = op
        out._done = False
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward_fn = backward_fn
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward_fn = None
        return out

    def _accumulate(self, grad: np.ndarray) -> None:
        grad = np.asarray(grad, dtype=self.data.dtype)
        if self.grad is None:
            # Copy views so later in-place clipping cannot alias an op buffer.
            self.grad = grad.copy() if grad.base is not None else grad
        else:
            self.grad = self.grad + grad

    # -- autodiff ------------------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from this scalar through the recorded graph.

        The graph is single-use: running backward a second time through any
        node that already participated raises, because intermediate buffers
        are not retained for a second pass. Build a fresh forward graph (or
        reset gradients and rerun the forward) instead.
        """
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.data.shape}")
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that does not require grad")
        if self._done:
            raise RuntimeError("backward() already ran through this graph; rebuild the forward pass before differentiating again")

        topo: list[Tensor] = []
        seen = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p._backward_fn is not None:
                    stack.append((p, False))
                elif id(p) not in seen and p._done:
                    raise RuntimeError("graph shares a node whose backward already ran; rebuild the forward pass")

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._done:
                raise RuntimeError("backward() already ran through part of this graph; rebuild the forward pass")
            if node._backward_fn is not None:
                node._backward_fn(node.grad)
                node._done = True
                # Release closure captures so large activations free eagerly.
                node._backward_fn = None
                node._parents = ()
                if node is not self:
                    node.grad = None

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        """A view of the same data outside the graph."""
        out = Tensor.__new__(Tensor)
        out.data = self.data
        out.grad = None
        out.requires_grad = False
        out._parents = ()
        out._backward_fn = None
        out._op = "detach"
        out._done = False
        return out

    # -- conveniences ----------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(()))

    def astype(self, dtype) -> "Tensor":
        from . import functional as F

        return F.cast(self, dtype)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}, op={self._op!r}{flag})"

    def __len__(self):
        return len(self.data)

    # Arithmetic delegates to functional so every op lives in one place.
    def __add__(self, other):
        from . import functional as F

        return F.add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        from . import functional as F

        return F.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import functional as F

        return F.mul(self, -1.0)

    def __sub__(self, other):
        from . import functional as F

        return F.add(self, F.mul(_as_tensor_like(other, self), -1.0))

    def __rsub__(self, other):
        from . import functional as F

        return F.add(_as_tensor_like(other, self), F.mul(self, -1.0))

    def __truediv__(self, other):
        from . import functional as F

        if isinstance(other, (int, float)):
            return F.mul(self, 1.0 / other)
        return F.div(self, other)

    def __matmul__(self, other):
        from . import functional as F

        return F.matmul(self, other)

    def __pow__(self, p):
        from . import functional as F

        return F.power(self, p)

    def __getitem__(self, idx):
        from . import functional as F

        return F.getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        from . import functional as F

        return F.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        from . import functional as F

        return F.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        from . import functional as F

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes):
        from . import functional as F

        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return F.transpose(self, axes if axes else None)

    def sqrt(self):
        from . import functional as F

        return F.sqrt(self)

    def exp(self):
        from . import functional as F

        return F.exp(self)

    def tanh(self):
        from . import functional as F

        return F.tanh(self)


def _as_tensor_like(value, ref: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=ref.data.dtype))


def as_tensor(value, dtype=np.float32) -> Tensor:
    """Wrap value in a constant Tensor if it is not one already."""
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))
