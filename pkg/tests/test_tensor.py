"""Tensor mechanics: graph lifecycle, grad toggles, dtype rules, finite checks."""
import numpy as np
import pytest

from winnow.autograd import functional as F
from winnow.autograd.tensor import FiniteCheckError, Tensor, no_grad, set_finite_checks


def test_scalar_backward_seeds_ones():
    x = Tensor(np.array(3.0, dtype=np.float32), requires_grad=True)
    y = F.mul(x, x)
    y.backward()
    assert x.grad == pytest.approx(6.0)


def test_sum_backward_is_all_ones():
    x = Tensor(np.arange(6, dtype=np.float32).reshape(2, 3), requires_grad=True)
    F.sum(x).backward()
    np.testing.assert_array_equal(x.grad, np.ones((2, 3), dtype=np.float32))


def test_sum_of_squares_backward_is_two_x():
    x = Tensor(np.array([1.0, 2.0], dtype=np.float32), requires_grad=True)
    F.sum(F.mul(x, x)).backward()
    np.testing.assert_allclose(x.grad, [2.0, 4.0])


def test_backward_requires_scalar():
    x = Tensor(np.ones((2, 2), dtype=np.float32), requires_grad=True)
    y = F.mul(x, 2.0)
    with pytest.raises(ValueError):
        y.backward()


def test_backward_twice_raises():
    x = Tensor(np.array(2.0, dtype=np.float32), requires_grad=True)
    y = F.mul(x, x)
    y.backward()
    with pytest.raises(RuntimeError, match="backward"):
        y.backward()


def test_grad_accumulates_across_graphs():
    x = Tensor(np.array(1.5, dtype=np.float32), requires_grad=True)
    F.mul(x, 2.0).backward()
    F.mul(x, 3.0).backward()
    assert x.grad == pytest.approx(5.0)


def test_no_grad_builds_no_graph():
    x = Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
    with no_grad():
        y = F.mul(x, 2.0)
    assert not y.requires_grad
    assert y._parents == ()


def test_non_numeric_dtype_rejected():
    with pytest.raises(TypeError):
        Tensor(np.ones(3, dtype=np.complex64), requires_grad=True)


def test_int_input_coerced_to_float32():
    assert Tensor([1, 2, 3]).dtype == np.float32
    assert Tensor(np.ones(3, dtype=np.int64)).dtype == np.float32


def test_finite_check_names_op():
    x = Tensor(np.array([1.0, 0.0], dtype=np.float32), requires_grad=True)
    with np.errstate(divide="ignore"), pytest.raises(FiniteCheckError, match="div"):
        F.div(Tensor(np.ones(2, dtype=np.float32)), x)


def test_finite_check_toggle():
    set_finite_checks(False)
    try:
        with np.errstate(divide="ignore"):
            y = F.div(Tensor(np.ones(2, dtype=np.float32)), Tensor(np.zeros(2, dtype=np.float32)))
        assert np.isinf(y.data).all()
    finally:
        set_finite_checks(True)


def test_detach_breaks_graph():
    x = Tensor(np.array(2.0, dtype=np.float32), requires_grad=True)
    y = F.mul(x, 3.0).detach()
    z = F.mul(y, 5.0)
    assert not z.requires_grad


def test_operator_sugar_matches_functional():
    a = Tensor(np.array([1.0, 2.0], dtype=np.float32), requires_grad=True)
    b = Tensor(np.array([3.0, 4.0], dtype=np.float32), requires_grad=True)
    np.testing.assert_allclose(((a + b) * a - b / a).numpy(), np.array([4.0 * 1 - 3, 6 * 2 - 2]), rtol=1e-6)


def test_mean_sum_reshape_methods():
    x = Tensor(np.arange(6, dtype=np.float32).reshape(2, 3), requires_grad=True)
    y = x.reshape((3, 2)).sum()
    y.backward()
    np.testing.assert_array_equal(x.grad, np.ones((2, 3), dtype=np.float32))


def test_backward_on_non_grad_tensor_raises():
    x = Tensor(np.array(1.0, dtype=np.float32))
    with pytest.raises(RuntimeError):
        x.backward()


def test_intermediate_grads_freed_after_backward():
    x = Tensor(np.array(2.0, dtype=np.float32), requires_grad=True)
    mid = F.mul(x, 3.0)
    out = F.mul(mid, 4.0)
    out.backward()
    assert x.grad == pytest.approx(12.0)
    assert mid.grad is None
